class DianaException(Exception):
    '''
    Base type for all of the DIANA exceptions.
    Subtypes should have a class attribute `error_message`. The error message
    may contain {format} strings which will be formatted using the
    Exception's constructor arguments.
    '''
    error_message = ''
    def __init__(self, *args, **kwargs):
        self.given_args = args
        self.given_kwargs = kwargs
        self.error_message = self.error_message.format(*args, **kwargs)
        self.args = (self.error_message, args, kwargs)

    def __str__(self):
        return self.error_message

    def __reduce__(self):
        # Sweep workers send exceptions back through pickle.
        return (_rebuild, (type(self), self.given_args, self.given_kwargs))

def _rebuild(cls, args, kwargs):
    return cls(*args, **kwargs)

# VALIDATION ERRORS ################################################################################

class ValidationError(DianaException):
    '''
    Raised for any input which does not describe a valid Grid, job or
    scenario. The command line maps these to exit status 2.
    '''
    error_message = '{}'

class DuplicateSiteId(ValidationError):
    error_message = 'Site id "{}" is used more than once.'

class UnknownSite(ValidationError):
    error_message = 'Unknown site "{}".'

class UnknownReplicaSite(ValidationError):
    error_message = 'Dataset "{}" has a replica on unknown site "{}".'

class UnknownDataset(ValidationError):
    error_message = 'Unknown dataset "{}".'

class MissingLink(ValidationError):
    error_message = 'No link metrics for {} -> {}.'

class DuplicateLink(ValidationError):
    error_message = 'Link {} -> {} is listed more than once.'

class NonPositiveBandwidth(ValidationError):
    error_message = 'Link {} -> {} has bandwidth {} Mbps; it must be positive.'

class InvalidValue(ValidationError):
    error_message = '{} must be {}, got {!r}.'

class InvalidWeight(ValidationError):
    error_message = 'Weight {} = {!r} is outside the range 1 to 20 (0 to ignore the term).'

class EmptyDatasetPool(ValidationError):
    error_message = 'Jobs need at least {} input datasets but the dataset pool is empty.'

class UnknownScheduler(ValidationError):
    error_message = 'Unknown scheduler "{}". Choose from {}.'

SCENARIO_INVALID = '''
{path}:{line}: {message}
'''.strip()
class ScenarioInvalid(ValidationError):
    '''
    Raised while reading a scenario file. `line` is 1-based, or 0 when the
    problem cannot be pinned to a line.
    '''
    error_message = SCENARIO_INVALID

# COMPUTATION ERRORS ###############################################################################

class ZeroLoss(DianaException):
    error_message = 'Loss rate is zero, the Mathis bound is infinite. Substitute a loss floor.'

class ZeroRtt(DianaException):
    error_message = 'Round trip time is zero, the Mathis bound is undefined.'

class NoCandidateSite(DianaException):
    error_message = 'No candidate site is left for job "{}".'

class Deadlock(DianaException):
    error_message = 'Simulation stalled at t={} with {} unfinished jobs.'

# RESULTS DATABASE ERRORS ##########################################################################

OUTOFDATE = '''
Results database is out of date. {current} should be {new}.
Delete "{filepath.absolute_path}" and run the scenario again.
'''.strip()
class DatabaseOutOfDate(DianaException):
    '''
    Raised by ResultsDB __init__ if the database schema is behind.
    '''
    error_message = OUTOFDATE

class DatabaseNotFound(DianaException, FileNotFoundError):
    error_message = 'Results database not found: "{}"'

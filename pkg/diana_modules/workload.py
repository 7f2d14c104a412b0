'''
Synthetic job streams: Poisson arrivals of analysis jobs with a CMS-like
profile, some of them bulk assignments of similar sub-jobs.
'''
import dataclasses
import math

import numpy

from . import common
from . import exceptions
from . import gridmodel

SECONDS_PER_DAY = 86400

# Dataset sizes quoted for the experiment, before scaling down to desk size.
DATASET_MIN_GB = 30
DATASET_MAX_GB = 1300
DATASET_SCALE = 1 / 1000

def _check_range(name, value, minimum=0):
    (low, high) = value
    if not minimum <= low <= high:
        raise exceptions.InvalidValue(name, f'a range with {minimum} <= min <= max', value)
    return (low, high)

@dataclasses.dataclass(frozen=True)
class WorkloadProfile:
    jobs_per_day: float = 250
    # Descriptive only: how many jobs the experiment expects to run at once.
    parallel_target: int = 0
    # None means every dataset of the topology.
    dataset_pool: tuple = None
    inputs_per_job: tuple = (0, 10)
    demand_distribution: tuple = (60.0, 3600.0)
    bulk_fraction: float = 0.0
    sub_jobs_per_bundle: tuple = (2, 10)
    executable_mb: tuple = (1.0, 10.0)
    output_mb: tuple = (1.0, 100.0)
    submit_sites: tuple = None
    seed: int = 0
    max_jobs: int = None

    def __post_init__(self):
        if not self.jobs_per_day > 0:
            raise exceptions.InvalidValue('jobs_per_day', 'positive', self.jobs_per_day)
        if not 0 <= self.bulk_fraction <= 1:
            raise exceptions.InvalidValue('bulk_fraction', 'between 0 and 1', self.bulk_fraction)
        _check_range('inputs_per_job', self.inputs_per_job)
        (low, high) = _check_range('demand_distribution', self.demand_distribution)
        if not low > 0:
            raise exceptions.InvalidValue('demand_distribution', 'positive', self.demand_distribution)
        _check_range('sub_jobs_per_bundle', self.sub_jobs_per_bundle, minimum=1)
        _check_range('executable_mb', self.executable_mb)
        _check_range('output_mb', self.output_mb)
        if self.max_jobs is not None and self.max_jobs < 0:
            raise exceptions.InvalidValue('max_jobs', 'nonnegative', self.max_jobs)

    @property
    def rate_per_second(self):
        return self.jobs_per_day / SECONDS_PER_DAY

def _uniform(rng, bounds):
    (low, high) = bounds
    if low == high:
        return float(low)
    return float(rng.uniform(low, high))

def _integer(rng, bounds):
    (low, high) = bounds
    return int(rng.integers(low, high + 1))

def generate(profile, horizon_seconds, topology):
    '''
    Draw jobs until the next arrival would fall past `horizon_seconds` or
    profile.max_jobs jobs exist. A smaller max_jobs yields a prefix of the
    same stream.
    '''
    if horizon_seconds is None and profile.max_jobs is None:
        raise exceptions.InvalidValue('horizon_seconds', 'given when max_jobs is not', None)

    if profile.dataset_pool is None:
        pool = list(topology.datasets)
    else:
        pool = list(profile.dataset_pool)
        for dataset_id in pool:
            topology.dataset(dataset_id)
    (min_inputs, max_inputs) = profile.inputs_per_job
    if min_inputs > 0 and not pool:
        raise exceptions.EmptyDatasetPool(min_inputs)
    if min_inputs > len(pool):
        raise exceptions.InvalidValue('inputs_per_job minimum', f'at most the {len(pool)} datasets in the pool', min_inputs)
    max_inputs = min(max_inputs, len(pool))

    submit_sites = list(profile.submit_sites or topology.site_ids)
    if not submit_sites:
        raise exceptions.InvalidValue('submit sites', 'nonempty', submit_sites)
    for site_id in submit_sites:
        topology.site(site_id)

    rng = numpy.random.default_rng(profile.seed)
    jobs = []
    now = 0.0
    while profile.max_jobs is None or len(jobs) < profile.max_jobs:
        arrival = now + float(rng.exponential(1 / profile.rate_per_second))
        if arrival <= now:
            arrival = math.nextafter(now, math.inf)
        if horizon_seconds is not None and arrival > horizon_seconds:
            break
        now = arrival

        input_count = _integer(rng, (min_inputs, max_inputs))
        if input_count:
            picks = rng.choice(len(pool), size=input_count, replace=False)
            inputs = tuple(pool[index] for index in sorted(picks))
        else:
            inputs = ()
        if rng.random() < profile.bulk_fraction:
            sub_jobs = _integer(rng, profile.sub_jobs_per_bundle)
        else:
            sub_jobs = 1
        jobs.append(gridmodel.JobDescriptor(
            id='job%05d' % len(jobs),
            submit_site=submit_sites[int(rng.integers(len(submit_sites)))],
            input_datasets=inputs,
            executable_mb=_uniform(rng, profile.executable_mb),
            output_mb=_uniform(rng, profile.output_mb),
            compute_demand=_uniform(rng, profile.demand_distribution),
            sub_job_count=sub_jobs,
            submit_time=now,
        ))
    common.log.debug('Generated %d jobs over %s.', len(jobs), common.human_seconds(now))
    return jobs

def synthesize_datasets(
        count,
        site_ids,
        seed=0,
        replicas=1,
        min_gb=DATASET_MIN_GB,
        max_gb=DATASET_MAX_GB,
        scale=DATASET_SCALE,
        gb_to_mb=common.GB_TO_MB,
    ):
    '''
    Datasets with log-uniform sizes in [min_gb, max_gb], multiplied by
    `scale`, each replicated on `replicas` distinct sites chosen uniformly.
    '''
    site_ids = sorted(site_ids)
    if not 1 <= replicas <= len(site_ids):
        raise exceptions.InvalidValue('replicas', f'between 1 and {len(site_ids)}', replicas)
    if not 0 < min_gb <= max_gb:
        raise exceptions.InvalidValue('dataset size range', '0 < min <= max', (min_gb, max_gb))
    rng = numpy.random.default_rng(seed)
    datasets = []
    for index in range(count):
        size_gb = math.exp(rng.uniform(math.log(min_gb), math.log(max_gb)))
        hosts = rng.choice(len(site_ids), size=replicas, replace=False)
        datasets.append(gridmodel.DatasetDescriptor(
            id='ds%03d' % index,
            size_mb=size_gb * scale * gb_to_mb,
            replicas=frozenset(site_ids[host] for host in hosts),
        ))
    return datasets

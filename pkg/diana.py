'''
This is the main launch file for DIANA.

When you run `python diana.py run scenarios/worked_example.yaml` or any other
command, your arguments will go to the diana_modules file as appropriate for
your command.
'''
import logging
handler = logging.StreamHandler()
log_format = '{levelname}:diana.{module}.{funcName}: {message}'
handler.setFormatter(logging.Formatter(log_format, style='{'))
logging.getLogger().addHandler(handler)

import argparse
import sys

from voussoirkit import betterhelp

from diana_modules import exceptions

# Composing the help text must not import the simulator and numpy, so the
# command docstrings live here instead of in their modules.
DOCSTRING = '''
DIANA
Data intensive and network aware meta-scheduling on a simulated Grid

The basics:
1. Simulate one scenario with the scheduler it names
    python diana.py run scenarios/heterogeneous.yaml

2. See why the matchmaker placed the first jobs where it did
    python diana.py run scenarios/worked_example.yaml --explain

3. Sweep schedulers against each other
    python diana.py compare scenarios/heterogeneous.yaml --schedulers diana,data_local

Commands for simulating:

{run}

{compare}

Commands for processing:

{breakdown}

TO SEE DETAILS ON EACH COMMAND, RUN
> python diana.py <command> --help
'''.lstrip()

SUB_DOCSTRINGS = dict(
breakdown='''
breakdown:
    Count, per execution site, the jobs a stored run executed there and the
    jobs exported in and out, with their mean queue time.

    Automatically dumps into a <database>_breakdown.json file in a breakdown
    folder next to the database.

    python diana.py breakdown --db out/results.db <flags>

    flags:
    --db "out/results.db":
        The results database written by run or compare.

    --run 3:
        The run id to break down.
        Default: the latest run in the database.

    --sort "name" | "executed" | "exported" | "queue"
        Sort the output.

    -v | --verbose:
        If provided, print extra information to the screen.
'''.strip(),

compare='''
compare:
    Run a scenario once per scheduler and job count, using the first N jobs
    of the same seeded workload for every point, and write compare.csv with
    one row per point.

    python diana.py compare scenario.yaml <flags>

    flags:
    --schedulers "diana,data_local":
        Comma separated schedulers. Choose from diana, data_local,
        compute_greedy, random.
        Default: diana,data_local,compute_greedy

    --jobs "25,50,100":
        Comma separated job counts.
        Default: 25,50,100,250,500,1000

    --workers 4:
        Run sweep points in this many processes.
        Default: 1

    --out "folder":
        Where to write compare.csv, points/, summary.txt and results.db.
        Default: <scenario name>_results

    --seed 7:
        Overrides the DIANA_SEED environment variable and the file's seed.

    --html:
        Also render the summary to summary.html.

    -v | --verbose:
        If provided, print extra information to the screen.
'''.strip(),

run='''
run:
    Simulate one scenario and write jobs.csv, summary.txt and results.db.

    python diana.py run scenario.yaml <flags>

    flags:
    --out "folder":
        Where to write the results.
        Default: <scenario name>_results

    --seed 7:
        Overrides the DIANA_SEED environment variable and the file's seed.

    --scheduler "diana" | "data_local" | "compute_greedy" | "random":
        Overrides the file's scheduler.

    --jobs 100:
        Only simulate the first N jobs of the workload.

    --explain:
        Print the cost matrix and the per-term costs for the first jobs
        against the load the scenario declares, and save them as explain.md.

    --trace:
        Also write trace.csv with every simulation event.

    --html:
        Also render the summary to summary.html.

    -v | --verbose:
        If provided, print extra information to the screen.

    Exit status is 0 on success, 2 when the scenario does not validate and
    1 for any other failure.
'''.strip(),
)

DOCSTRING = betterhelp.add_previews(DOCSTRING, SUB_DOCSTRINGS)

####################################################################################################
####################################################################################################

def breakdown_gateway(args):
    from diana_modules import breakdown
    return breakdown.breakdown_argparse(args)

def compare_gateway(args):
    from diana_modules import compare
    return compare.compare_argparse(args)

def run_gateway(args):
    from diana_modules import run
    return run.run_scenario_argparse(args)

def build_parser():
    parser = argparse.ArgumentParser(description=__doc__)
    subparsers = parser.add_subparsers()

    p_breakdown = subparsers.add_parser('breakdown')
    p_breakdown.add_argument('--db', dest='database', required=True)
    p_breakdown.add_argument('--run', dest='run_id', default=None)
    p_breakdown.add_argument('--sort', dest='sort', default=None)
    p_breakdown.add_argument('-v', '--verbose', dest='verbose', action='store_true')
    p_breakdown.set_defaults(func=breakdown_gateway)

    p_compare = subparsers.add_parser('compare')
    p_compare.add_argument('scenario')
    p_compare.add_argument('--schedulers', dest='schedulers', default='diana,data_local,compute_greedy')
    p_compare.add_argument('--jobs', dest='job_counts', default='25,50,100,250,500,1000')
    p_compare.add_argument('--workers', dest='workers', default=1)
    p_compare.add_argument('--out', dest='out_dir', default=None)
    p_compare.add_argument('--seed', dest='seed', default=None)
    p_compare.add_argument('--html', dest='html', action='store_true')
    p_compare.add_argument('-v', '--verbose', dest='verbose', action='store_true')
    p_compare.set_defaults(func=compare_gateway)

    p_run = subparsers.add_parser('run')
    p_run.add_argument('scenario')
    p_run.add_argument('--out', dest='out_dir', default=None)
    p_run.add_argument('--seed', dest='seed', default=None)
    p_run.add_argument('--scheduler', dest='scheduler', default=None)
    p_run.add_argument('--jobs', dest='n_jobs', default=None)
    p_run.add_argument('--explain', dest='explain', action='store_true')
    p_run.add_argument('--trace', dest='trace', action='store_true')
    p_run.add_argument('--html', dest='html', action='store_true')
    p_run.add_argument('-v', '--verbose', dest='verbose', action='store_true')
    p_run.set_defaults(func=run_gateway)

    return parser

def main(argv):
    parser = build_parser()
    try:
        return betterhelp.subparser_main(
            argv,
            parser,
            main_docstring=DOCSTRING,
            sub_docstrings=SUB_DOCSTRINGS,
        )
    except exceptions.ValidationError as exc:
        # Non-numeric --seed, --jobs, --workers or --run.
        print(exc)
        return 2
    except exceptions.DianaException as exc:
        print(exc)
        return 1

if __name__ == '__main__':
    raise SystemExit(main(sys.argv[1:]))

'''
Sweeps of one scenario over several schedulers and job counts. Each
(scheduler, N) point runs the first N jobs of the same seeded stream, so the
only thing that changes between rows is the policy and the load.
'''
import concurrent.futures
import logging

from voussoirkit import pathclass

from . import common
from . import exceptions
from . import report
from . import run
from . import scenario as scenario_module
from . import schedulers as schedulers_module

DEFAULT_JOB_COUNTS = [25, 50, 100, 250, 500, 1000]

def parse_job_counts(job_counts):
    counts = []
    for count in common.split_list(job_counts):
        try:
            count = int(count)
        except ValueError:
            raise exceptions.InvalidValue('jobs', 'a list of positive integers', job_counts)
        if count < 1:
            raise exceptions.InvalidValue('jobs', 'a list of positive integers', job_counts)
        counts.append(count)
    if not counts:
        raise exceptions.InvalidValue('jobs', 'at least one job count', job_counts)
    return counts

def parse_schedulers(names):
    names = common.split_list(names)
    if not names:
        raise exceptions.InvalidValue('schedulers', 'at least one scheduler', names)
    for name in names:
        schedulers_module.get_policy(name)
    return names

def point_filepath(out_dir, scheduler, n_jobs):
    return out_dir.with_child('points').with_child('%s_%d.csv' % (scheduler, n_jobs))

def run_sweep_point(path, seed, scheduler, n_jobs, out_dir):
    '''
    One sweep point, self-contained so it can run in a worker process: load
    the scenario, simulate, write the point's job CSV.
    '''
    scenario = scenario_module.load_scenario(path, seed=seed, scheduler=scheduler)
    result = run.run_point(scenario, n_jobs=n_jobs)
    report.write_jobs_csv(point_filepath(pathclass.Path(out_dir), scheduler, n_jobs), result.records)
    return result

def compare(
        path,
        schedulers,
        job_counts,
        out_dir=None,
        *,
        seed=None,
        workers=1,
        html=False,
    ):
    '''
    Run every (scheduler, N) point and write compare.csv, the per-point job
    CSVs, summary.txt and the results.db archive. Returns the exit status.
    '''
    try:
        schedulers = parse_schedulers(schedulers)
        job_counts = parse_job_counts(job_counts)
        scenario = scenario_module.load_scenario(path, seed=seed)
        if workers < 1:
            raise exceptions.InvalidValue('workers', 'at least 1', workers)
        if out_dir is None:
            out_dir = run.default_out_dir(scenario)
        out_dir = pathclass.Path(out_dir)
        out_dir.makedirs(exist_ok=True)

        points = [(scheduler, n_jobs) for scheduler in schedulers for n_jobs in job_counts]
        common.log.debug('Sweeping %d points with %d workers.', len(points), workers)
        arguments = [
            (scenario.path, scenario.seed, scheduler, n_jobs, out_dir.absolute_path)
            for (scheduler, n_jobs) in points
        ]
        if workers == 1:
            results = [run_sweep_point(*args) for args in arguments]
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
                futures = [executor.submit(run_sweep_point, *args) for args in arguments]
                results = [future.result() for future in futures]

        for ((scheduler, n_jobs), result) in zip(points, results):
            print(
                f'{scheduler:>15} {n_jobs:>6} jobs: '
                f'queue {common.human_seconds(result.summary.mean_queue)}, '
                f'exec {common.human_seconds(result.summary.mean_exec)}, '
                f'completion {common.human_seconds(result.summary.mean_completion)}'
            )

        compare_path = out_dir.with_child('compare.csv')
        report.write_compare_csv(compare_path, [result.summary for result in results])
        text = report.summary_markdown(scenario.name, [(scenario.seed, result) for result in results])
        report.write_summary(out_dir, text, html=html)
        run.archive(out_dir, scenario, results)
    except exceptions.ValidationError as exc:
        print(exc)
        return run.EXIT_VALIDATION
    except exceptions.DianaException as exc:
        print(exc)
        return run.EXIT_INTERNAL

    print('Wrote', compare_path.relative_path)
    return run.EXIT_OK

def compare_argparse(args):
    if args.verbose:
        common.log.setLevel(logging.DEBUG)

    return compare(
        args.scenario,
        args.schedulers,
        args.job_counts,
        out_dir=args.out_dir,
        seed=common.int_none(args.seed, '--seed'),
        workers=common.int_none(args.workers, '--workers'),
        html=args.html,
    )

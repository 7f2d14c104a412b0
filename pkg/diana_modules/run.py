import logging

from voussoirkit import pathclass

from . import common
from . import exceptions
from . import matchmaker
from . import report
from . import resultsdb
from . import scenario as scenario_module
from . import simulator

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2

EXPLAIN_LIMIT = 10

def default_out_dir(scenario):
    return pathclass.Path('.').with_child('%s_results' % scenario.name)

def run_point(scenario, scheduler=None, n_jobs=None, trace=False):
    '''
    Simulate the scenario's first `n_jobs` jobs (all of them when None) with
    the given scheduler.
    '''
    jobs = scenario.jobs_for(n_jobs)
    settings = scenario.sim_settings(scheduler=scheduler, trace=trace)
    common.log.debug('Running %s with %s on %d jobs.', scenario.name, settings.scheduler, len(jobs))
    return simulator.run(scenario.topology, jobs, scenario.weights, settings)

def explain_scenario(scenario, limit=EXPLAIN_LIMIT):
    '''
    Cost tables for the scenario's first jobs against the load the scenario
    declares.
    '''
    snapshot = scenario.snapshot()
    nc = scenario.oracle()
    sections = []
    for job in scenario.jobs[:limit]:
        explanation = matchmaker.explain_job(
            job,
            scenario.topology,
            snapshot,
            nc,
            scenario.weights,
            k=scenario.shortlist_k,
        )
        sections.append(report.explain_markdown(explanation))
    return '\n'.join(sections)

def archive(out_dir, scenario, results):
    database = resultsdb.ResultsDB(out_dir.with_child('results.db'))
    try:
        for result in results:
            database.insert_run(scenario.name, scenario.seed, result, commit=False)
        database.sql.commit()
    finally:
        database.close()

def run_scenario(
        path,
        out_dir=None,
        *,
        seed=None,
        scheduler=None,
        explain=False,
        trace=False,
        html=False,
        n_jobs=None,
    ):
    '''
    Simulate one scenario file and write jobs.csv, summary.txt and the
    results.db archive. Returns the process exit status.
    '''
    try:
        scenario = scenario_module.load_scenario(path, seed=seed, scheduler=scheduler)
        if out_dir is None:
            out_dir = default_out_dir(scenario)
        out_dir = pathclass.Path(out_dir)
        out_dir.makedirs(exist_ok=True)

        if explain:
            text = explain_scenario(scenario)
            print(text)
            report.write_atomic(out_dir.with_child('explain.md'), text)

        result = run_point(scenario, n_jobs=n_jobs, trace=trace)
        report.write_jobs_csv(out_dir.with_child('jobs.csv'), result.records)
        text = report.summary_markdown(scenario.name, [(scenario.seed, result)])
        report.write_summary(out_dir, text, html=html)
        if trace:
            report.write_trace_csv(out_dir.with_child('trace.csv'), result.trace)
        archive(out_dir, scenario, [result])
    except exceptions.ValidationError as exc:
        print(exc)
        return EXIT_VALIDATION
    except exceptions.DianaException as exc:
        print(exc)
        return EXIT_INTERNAL

    summary = result.summary
    print(
        f'{summary.scheduler}: {summary.n_jobs} jobs, '
        f'mean queue {common.human_seconds(summary.mean_queue)}, '
        f'mean completion {common.human_seconds(summary.mean_completion)}, '
        f'{summary.exported} exported.'
    )
    print('Wrote', out_dir.with_child('jobs.csv').relative_path)
    return EXIT_OK

def run_scenario_argparse(args):
    if args.verbose:
        common.log.setLevel(logging.DEBUG)

    return run_scenario(
        args.scenario,
        out_dir=args.out_dir,
        seed=common.int_none(args.seed, '--seed'),
        scheduler=args.scheduler,
        explain=args.explain,
        trace=args.trace,
        html=args.html,
        n_jobs=common.int_none(args.n_jobs, '--jobs'),
    )

import json
import logging

from . import common
from . import exceptions
from . import resultsdb

def breakdown_run(database, run_id=None):
    '''
    Given a results database, return a json dict breaking down one run's
    placements per execution site: jobs executed there, jobs exported in and
    out, and their mean queue time. The latest run is used when run_id is None.
    '''
    if run_id is None:
        run_id = database.latest_run_id()
    if run_id is None or database.get_run(run_id) is None:
        raise exceptions.InvalidValue('run', 'a run stored in %s' % database.filepath.basename, run_id)

    cur = database.sql.cursor()
    cur.execute('SELECT exec_site, exported_from, submit_t, start_t FROM jobs WHERE run_id == ?', [run_id])
    return tally(common.fetchgenerator(cur))

def tally(rows):
    '''
    rows: (exec_site, exported_from, submit_time, start_time) per job, with
    exported_from None for jobs that stayed where they were placed.
    '''
    breakdown_results = {}
    def _entry(site_id):
        return breakdown_results.setdefault(
            site_id,
            {'executed': 0, 'exported_in': 0, 'exported_out': 0, 'queue_total': 0.0},
        )

    for (exec_site, exported_from, submit_t, start_t) in rows:
        entry = _entry(exec_site)
        entry['executed'] += 1
        entry['queue_total'] += start_t - submit_t
        if exported_from is not None:
            entry['exported_in'] += 1
            _entry(exported_from)['exported_out'] += 1

    for entry in breakdown_results.values():
        queue_total = entry.pop('queue_total')
        entry['mean_queue'] = queue_total / entry['executed'] if entry['executed'] else 0.0

    return breakdown_results

def breakdown_argparse(args):
    if args.verbose:
        common.log.setLevel(logging.DEBUG)

    try:
        database = resultsdb.ResultsDB(args.database, do_create=False)
    except exceptions.DatabaseNotFound as exc:
        print(exc)
        return 1

    try:
        run_id = common.int_none(args.run_id, '--run')
        breakdown_results = breakdown_run(database, run_id)
    except exceptions.ValidationError as exc:
        print(exc)
        return 2
    finally:
        database.close()

    def sort_name(name):
        return name.lower()
    def sort_executed(name):
        return (-1 * breakdown_results[name]['executed'], name.lower())
    def sort_exported(name):
        counts = breakdown_results[name]
        return (-1 * (counts['exported_in'] + counts['exported_out']), name.lower())
    def sort_queue(name):
        return (-1 * breakdown_results[name]['mean_queue'], name.lower())
    breakdown_sorters = {
        'name': sort_name,
        'executed': sort_executed,
        'exported': sort_exported,
        'queue': sort_queue,
    }

    breakdown_names = list(breakdown_results.keys())
    if args.sort is not None:
        try:
            sorter = breakdown_sorters[args.sort.lower()]
        except KeyError:
            message = '{sorter} is not a sorter. Choose from {options}'
            message = message.format(sorter=args.sort, options=list(breakdown_sorters.keys()))
            print(message)
            return 2
        breakdown_names.sort(key=sorter)
        dump = '    "{name}": {entry}'
        dump = [dump.format(name=name, entry=json.dumps(breakdown_results[name])) for name in breakdown_names]
        dump = ',\n'.join(dump)
        dump = '{\n' + dump + '\n}\n'
    else:
        dump = json.dumps(breakdown_results)

    if args.sort is None:
        breakdown_basename = '%s_breakdown.json'
    else:
        breakdown_basename = '%%s_breakdown_%s.json' % args.sort.lower()

    breakdown_basename = breakdown_basename % database.filepath.replace_extension('').basename
    breakdown_filepath = database.breakdown_dir.with_child(breakdown_basename)
    breakdown_filepath.parent.makedirs(exist_ok=True)
    breakdown_file = breakdown_filepath.open('w')
    with breakdown_file:
        breakdown_file.write(dump)
    print('Wrote', breakdown_filepath.relative_path)

    return 0

'''
Everything that turns results into files or text: the per-job CSV, the sweep
CSV, the event trace, the Markdown summary and the --explain cost tables.

Floats always go through common.format_float so the CSV files are byte-stable.
'''
import csv
import io
import os

import markdown

from . import breakdown as breakdown_module
from . import common

JOB_COLUMNS = [
    'job_id',
    'scheduler',
    'submit_site',
    'exec_site',
    'submit_t',
    'transfer_done_t',
    'start_t',
    'finish_t',
    'queue_time',
    'exec_time',
    'completion_time',
    'exported',
]

COMPARE_COLUMNS = [
    'scheduler',
    'n_jobs',
    'mean_queue',
    'mean_exec',
    'mean_completion',
]

TRACE_COLUMNS = ['time', 'seq', 'kind', 'job', 'site', 'detail']

fmt = common.format_float

def csv_text(header, rows):
    handle = io.StringIO()
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return handle.getvalue()

def write_atomic(filepath, text):
    '''
    Write to a temporary sibling and rename it over the target, so readers
    never see a partial file.
    '''
    filepath.parent.makedirs(exist_ok=True)
    temp = filepath.parent.with_child(filepath.basename + '.tmp')
    with temp.open('w', encoding='utf-8', newline='') as handle:
        handle.write(text)
    os.replace(temp.absolute_path, filepath.absolute_path)
    return filepath

def job_rows(records):
    for record in records:
        yield [
            record.job,
            record.scheduler,
            record.submit_site,
            record.exec_site,
            fmt(record.submit_time),
            fmt(record.transfer_done_time),
            fmt(record.start_time),
            fmt(record.finish_time),
            fmt(record.queue_time),
            fmt(record.execution_time),
            fmt(record.completion_time),
            record.exported_from or '',
        ]

def write_jobs_csv(filepath, records):
    return write_atomic(filepath, csv_text(JOB_COLUMNS, job_rows(records)))

def compare_rows(summaries):
    for summary in summaries:
        yield [
            summary.scheduler,
            summary.n_jobs,
            fmt(summary.mean_queue),
            fmt(summary.mean_exec),
            fmt(summary.mean_completion),
        ]

def write_compare_csv(filepath, summaries):
    return write_atomic(filepath, csv_text(COMPARE_COLUMNS, compare_rows(summaries)))

def write_trace_csv(filepath, events):
    rows = (
        [fmt(event.time), event.seq, event.kind, event.job or '', event.site or '', event.detail]
        for event in events
    )
    return write_atomic(filepath, csv_text(TRACE_COLUMNS, rows))

# MARKDOWN #########################################################################################

def markdown_table(header, rows):
    lines = [
        '| ' + ' | '.join(header) + ' |',
        '| ' + ' | '.join('---' for column in header) + ' |',
    ]
    for row in rows:
        lines.append('| ' + ' | '.join(str(cell) for cell in row) + ' |')
    return '\n'.join(lines)

def summary_markdown(scenario_name, results):
    '''
    results: list of (seed, SimResult).
    '''
    lines = [f'# {scenario_name}', '']
    header = [
        'scheduler', 'seed', 'jobs', 'mean queue', 'median queue', 'mean exec', 'median exec',
        'mean completion', 'median completion', 'exported', 'makespan',
    ]
    rows = []
    for (seed, result) in results:
        summary = result.summary
        rows.append([
            summary.scheduler,
            seed,
            summary.n_jobs,
            fmt(summary.mean_queue),
            fmt(summary.median_queue),
            fmt(summary.mean_exec),
            fmt(summary.median_exec),
            fmt(summary.mean_completion),
            fmt(summary.median_completion),
            summary.exported,
            fmt(summary.makespan),
        ])
    lines.append(markdown_table(header, rows))

    for (seed, result) in results:
        lines.extend(['', f'## Sites ({result.summary.scheduler}, {result.summary.n_jobs} jobs)', ''])
        breakdown = breakdown_module.tally(
            (record.exec_site, record.exported_from, record.submit_time, record.start_time)
            for record in result.records
        )
        rows = []
        for (site_id, peak) in sorted(result.summary.peak_running.items()):
            counts = breakdown.get(site_id, {'executed': 0, 'exported_in': 0, 'exported_out': 0})
            rows.append([site_id, counts['executed'], counts['exported_in'], counts['exported_out'], peak])
        lines.append(markdown_table(['site', 'executed', 'exported in', 'exported out', 'peak running'], rows))
    lines.append('')
    return '\n'.join(lines)

def write_summary(out_dir, text, html=False):
    write_atomic(out_dir.with_child('summary.txt'), text)
    if html:
        body = markdown.markdown(text, extensions=['tables'], output_format='html5')
        write_atomic(out_dir.with_child('summary.html'), body)

def explain_markdown(explanation):
    lines = [
        f'## Job {explanation.job} from {explanation.submit_site}',
        '',
    ]
    rows = [
        [
            row.site,
            fmt(row.data_transfer_cost),
            fmt(row.compute_cost),
            fmt(row.network_cost),
            fmt(row.total),
            '*' if row.selected else '',
        ]
        for row in explanation.rows
    ]
    lines.append(markdown_table(['site', 'data transfer', 'computation', 'network', 'total', 'selected'], rows))
    lines.extend(['', 'Cost matrix (row = submission site, column = execution site):', ''])
    sites = list(explanation.matrix.sites)
    matrix_rows = [[src] + [fmt(explanation.matrix[(src, dst)]) for dst in sites] for src in sites]
    lines.append(markdown_table(['from \\ to'] + sites, matrix_rows))
    placement = explanation.placement
    replicas = ', '.join(f'{dataset}@{site}' for (dataset, site) in sorted(placement.chosen_replicas.items()))
    lines.extend([
        '',
        f'Selected {placement.exec_site}, total {fmt(placement.breakdown.total)}.',
        f'Replicas: {replicas or "none"}.',
        '',
    ])
    return '\n'.join(lines)

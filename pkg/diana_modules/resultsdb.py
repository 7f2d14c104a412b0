import sqlite3
import time

from . import common
from . import exceptions

from voussoirkit import pathclass
from voussoirkit import sqlhelpers

DATABASE_VERSION = 1
DB_VERSION_PRAGMA = f'''
PRAGMA user_version = {DATABASE_VERSION};
'''

DB_PRAGMAS = f'''
PRAGMA foreign_keys = ON;
'''

DB_INIT = f'''
{DB_PRAGMAS}
{DB_VERSION_PRAGMA}
----------------------------------------------------------------------------------------------------
CREATE TABLE IF NOT EXISTS runs(
    run_id INTEGER PRIMARY KEY,
    scenario TEXT,
    scheduler TEXT,
    seed INT,
    n_jobs INT,
    mean_queue REAL,
    median_queue REAL,
    mean_exec REAL,
    median_exec REAL,
    mean_completion REAL,
    median_completion REAL,
    exported INT,
    makespan REAL,
    created INT
);
----------------------------------------------------------------------------------------------------
CREATE TABLE IF NOT EXISTS jobs(
    run_id INT REFERENCES runs(run_id),
    job_id TEXT,
    submit_site TEXT,
    exec_site TEXT,
    submit_t REAL,
    transfer_done_t REAL,
    start_t REAL,
    finish_t REAL,
    output_t REAL,
    exported_from TEXT,
    total_cost REAL
);
CREATE INDEX IF NOT EXISTS jobs_run_index ON jobs(run_id);
'''

SQL_RUN_COLUMNS = [
    'run_id',
    'scenario',
    'scheduler',
    'seed',
    'n_jobs',
    'mean_queue',
    'median_queue',
    'mean_exec',
    'median_exec',
    'mean_completion',
    'median_completion',
    'exported',
    'makespan',
    'created',
]

SQL_JOB_COLUMNS = [
    'run_id',
    'job_id',
    'submit_site',
    'exec_site',
    'submit_t',
    'transfer_done_t',
    'start_t',
    'finish_t',
    'output_t',
    'exported_from',
    'total_cost',
]

class DBEntry:
    '''
    Turns a row tuple into an object with one attribute per column.
    '''
    def __init__(self, dbrow, columns):
        for (index, attribute) in enumerate(columns):
            setattr(self, attribute, dbrow[index])

    def __repr__(self):
        return 'DBEntry(%r)' % (vars(self),)

class ResultsDB:
    '''
    SQLite archive of simulation runs, kept next to the CSV output.
    '''
    def __init__(self, filepath, *, do_create=True, skip_version_check=False):
        self.filepath = pathclass.Path(filepath)
        if not self.filepath.is_file:
            if not do_create:
                raise exceptions.DatabaseNotFound(self.filepath.absolute_path)
            common.log.debug('New results database %s.', self.filepath.absolute_path)

        self.filepath.parent.makedirs(exist_ok=True)
        self.breakdown_dir = self.filepath.parent.with_child('breakdown')

        existing_database = self.filepath.exists
        self.sql = sqlite3.connect(self.filepath.absolute_path)
        self.cur = self.sql.cursor()

        if existing_database:
            if not skip_version_check:
                self._check_version()
            self._load_pragmas()
        else:
            self._first_time_setup()

    def _check_version(self):
        '''
        Compare database's user_version against DATABASE_VERSION,
        raising exceptions.DatabaseOutOfDate if not correct.
        '''
        existing = self.cur.execute('PRAGMA user_version').fetchone()[0]
        if existing != DATABASE_VERSION:
            raise exceptions.DatabaseOutOfDate(
                current=existing,
                new=DATABASE_VERSION,
                filepath=self.filepath,
            )

    def _first_time_setup(self):
        self.sql.executescript(DB_INIT)
        self.sql.commit()

    def _load_pragmas(self):
        self.sql.executescript(DB_PRAGMAS)
        self.sql.commit()

    def __repr__(self):
        return 'ResultsDB(%s)' % self.filepath

    def close(self):
        self.sql.close()

    def insert_run(self, scenario_name, seed, result, commit=True):
        '''
        Store one simulation result, summary and per-job rows, and return its
        run_id.
        '''
        summary = result.summary
        postdata = {
            'run_id': None,
            'scenario': scenario_name,
            'scheduler': summary.scheduler,
            'seed': seed,
            'n_jobs': summary.n_jobs,
            'mean_queue': summary.mean_queue,
            'median_queue': summary.median_queue,
            'mean_exec': summary.mean_exec,
            'median_exec': summary.median_exec,
            'mean_completion': summary.mean_completion,
            'median_completion': summary.median_completion,
            'exported': summary.exported,
            'makespan': summary.makespan,
            'created': int(time.time()),
        }
        cur = self.sql.cursor()
        (qmarks, bindings) = sqlhelpers.insert_filler(SQL_RUN_COLUMNS, postdata)
        cur.execute('INSERT INTO runs VALUES(%s)' % qmarks, bindings)
        run_id = cur.lastrowid

        for record in result.records:
            postdata = {
                'run_id': run_id,
                'job_id': record.job,
                'submit_site': record.submit_site,
                'exec_site': record.exec_site,
                'submit_t': record.submit_time,
                'transfer_done_t': record.transfer_done_time,
                'start_t': record.start_time,
                'finish_t': record.finish_time,
                'output_t': record.output_time,
                'exported_from': record.exported_from,
                'total_cost': record.placement.breakdown.total,
            }
            (qmarks, bindings) = sqlhelpers.insert_filler(SQL_JOB_COLUMNS, postdata)
            cur.execute('INSERT INTO jobs VALUES(%s)' % qmarks, bindings)

        common.log.debug('Archived run %d with %d jobs.', run_id, len(result.records))
        if commit:
            self.sql.commit()
        return run_id

    def get_runs(self):
        cur = self.sql.cursor()
        cur.execute('SELECT * FROM runs ORDER BY run_id')
        return [DBEntry(row, SQL_RUN_COLUMNS) for row in cur.fetchall()]

    def get_run(self, run_id):
        cur = self.sql.cursor()
        cur.execute('SELECT * FROM runs WHERE run_id == ?', [run_id])
        row = cur.fetchone()
        if row is None:
            return None
        return DBEntry(row, SQL_RUN_COLUMNS)

    def latest_run_id(self):
        row = self.sql.execute('SELECT MAX(run_id) FROM runs').fetchone()
        return row[0]

    def get_jobs(self, run_id):
        cur = self.sql.cursor()
        cur.execute('SELECT * FROM jobs WHERE run_id == ? ORDER BY job_id', [run_id])
        return [DBEntry(row, SQL_JOB_COLUMNS) for row in cur.fetchall()]

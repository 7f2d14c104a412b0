import json
import os

import pytest

import diana
from diana_modules import breakdown
from diana_modules import exceptions
from diana_modules import resultsdb
from diana_modules import run

@pytest.fixture
def hotspot_db(scenario_dir, tmp_path):
    out_dir = str(tmp_path / 'out')
    status = run.run_scenario(os.path.join(scenario_dir, 'export_hotspot.yaml'), out_dir)
    assert status == run.EXIT_OK
    return os.path.join(out_dir, 'results.db')

def parse(argv):
    return diana.build_parser().parse_args(argv)

def test_tally():
    rows = [
        ('a', None, 0.0, 0.0),
        ('a', None, 0.0, 10.0),
        ('b', 'a', 5.0, 25.0),
    ]
    assert breakdown.tally(rows) == {
        'a': {'executed': 2, 'exported_in': 0, 'exported_out': 1, 'mean_queue': 5.0},
        'b': {'executed': 1, 'exported_in': 1, 'exported_out': 0, 'mean_queue': 20.0},
    }
    assert breakdown.tally([]) == {}

def test_breakdown_run(hotspot_db):
    database = resultsdb.ResultsDB(hotspot_db, do_create=False)
    results = breakdown.breakdown_run(database)
    assert set(results) == {'hot', 'idle'}
    assert sum(entry['executed'] for entry in results.values()) == 40
    assert sum(entry['exported_in'] for entry in results.values()) == sum(entry['exported_out'] for entry in results.values())
    assert results['idle']['exported_in'] >= 1
    assert breakdown.breakdown_run(database, database.latest_run_id()) == results
    with pytest.raises(exceptions.InvalidValue):
        breakdown.breakdown_run(database, 12345)
    database.close()

def test_breakdown_writes_json(hotspot_db):
    args = parse(['breakdown', '--db', hotspot_db])
    assert breakdown.breakdown_argparse(args) == 0
    filepath = os.path.join(os.path.dirname(hotspot_db), 'breakdown', 'results_breakdown.json')
    with open(filepath, 'r', encoding='utf-8') as handle:
        dumped = json.load(handle)
    assert set(dumped) == {'hot', 'idle'}

def test_breakdown_sorted(hotspot_db):
    args = parse(['breakdown', '--db', hotspot_db, '--sort', 'executed'])
    assert breakdown.breakdown_argparse(args) == 0
    filepath = os.path.join(os.path.dirname(hotspot_db), 'breakdown', 'results_breakdown_executed.json')
    with open(filepath, 'r', encoding='utf-8') as handle:
        text = handle.read()
    dumped = json.loads(text)
    executed = [entry['executed'] for entry in dumped.values()]
    assert executed == sorted(executed, reverse=True)
    assert breakdown.breakdown_argparse(parse(['breakdown', '--db', hotspot_db, '--sort', 'colour'])) == 2

def test_breakdown_errors(hotspot_db, tmp_path):
    assert breakdown.breakdown_argparse(parse(['breakdown', '--db', str(tmp_path / 'nope.db')])) == 1
    assert breakdown.breakdown_argparse(parse(['breakdown', '--db', hotspot_db, '--run', '99'])) == 2
    assert diana.main(['breakdown', '--db', hotspot_db, '--run', 'latest']) == 2

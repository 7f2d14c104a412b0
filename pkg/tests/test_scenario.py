import os
import textwrap

import pytest

from diana_modules import exceptions
from diana_modules import scenario

def parse(text, **kwargs):
    return scenario.parse_scenario(textwrap.dedent(text).lstrip(), **kwargs)

def invalid(text, **kwargs):
    with pytest.raises(exceptions.ScenarioInvalid) as excinfo:
        parse(text, **kwargs)
    return excinfo.value

TWO_SITES = '''
schema: 1
sites:
  - {id: a, cpus: 2, queued: 3}
  - {id: b, cpus: 4, hosts: [d]}
links:
  - {src: a, dst: b, rtt_ms: 5, bandwidth_mbps: 100}
datasets:
  - {id: d, size_gb: 2}
workload:
  jobs:
    - {id: j1, submit_site: a, inputs: [d], demand: 30}
    - {submit_site: b, demand: 10, sub_jobs: 2}
'''

def test_parse_two_sites():
    loaded = parse(TWO_SITES)
    assert loaded.name == 'scenario'
    assert loaded.scheduler == 'diana'
    assert loaded.seed == 0
    assert loaded.topology.site_ids == ['a', 'b']
    assert loaded.topology.dataset('d').replicas == {'b'}
    assert loaded.topology.dataset('d').size_mb == 2048
    # Links are symmetric unless told otherwise.
    assert loaded.topology.link('b', 'a').rtt_ms == 5
    assert [job.id for job in loaded.jobs] == ['j1', 'job00001']
    assert loaded.jobs[1].sub_job_count == 2
    assert loaded.snapshot().per_site_queue == {'a': 3, 'b': 0}

def test_weight_out_of_range_names_the_line():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        weights:
          w5: 25
    ''')
    assert exc.given_kwargs['line'] == 5
    assert '1 to 20' in str(exc)
    assert str(exc).startswith('<scenario>:5:')

def test_unknown_key_names_the_line():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2, colour: red}
    ''')
    assert exc.given_kwargs['line'] == 3
    assert 'colour' in str(exc)

def test_unknown_top_level_key():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        sheduler: diana
    ''')
    assert exc.given_kwargs['line'] == 4

def test_missing_link():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        workload:
          jobs:
            - {id: j, submit_site: a}
    ''')
    assert 'No link metrics' in str(exc)

def test_listed_reverse_link_is_not_overwritten():
    loaded = parse('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        links:
          - {src: a, dst: b, rtt_ms: 5, bandwidth_mbps: 100}
          - {src: b, dst: a, rtt_ms: 50, bandwidth_mbps: 10}
    ''')
    forward = loaded.topology.link('a', 'b')
    backward = loaded.topology.link('b', 'a')
    assert (forward.rtt_ms, forward.bandwidth_mbps) == (5, 100)
    assert (backward.rtt_ms, backward.bandwidth_mbps) == (50, 10)

def test_one_way_link():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        links:
          - {src: a, dst: b, bandwidth_mbps: 100, symmetric: false}
        workload:
          jobs:
            - {id: j, submit_site: a}
    ''')
    assert 'No link metrics' in str(exc)

def test_symmetric_must_be_a_bool():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        links:
          - {src: a, dst: b, bandwidth_mbps: 100, symmetric: "false"}
    ''')
    assert exc.given_kwargs['line'] == 6
    assert 'true or false' in str(exc)

def test_duplicate_link():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        links:
          - {src: a, dst: b, bandwidth_mbps: 100}
          - {src: a, dst: b, bandwidth_mbps: 10}
    ''')
    assert exc.given_kwargs['line'] == 7
    assert 'more than once' in str(exc)

def test_unknown_replica_site():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        datasets:
          - {id: d, size_mb: 5, replicas: [mars]}
    ''')
    assert exc.given_kwargs['line'] == 5
    assert 'mars' in str(exc)

def test_dataset_without_replicas():
    invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        datasets:
          - {id: d, size_mb: 5}
    ''')

def test_not_a_number():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: many}
    ''')
    assert exc.given_kwargs['line'] == 3

def test_duplicate_site():
    exc = invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: a, cpus: 2}
    ''')
    assert exc.given_kwargs['line'] == 4

def test_schema_version():
    exc = invalid('''
        schema: 2
        sites:
          - {id: a, cpus: 2}
    ''')
    assert exc.given_kwargs['line'] == 1

def test_scenario_without_sites():
    exc = invalid('''
        schema: 1
        sites: []
        workload:
          profile: {max_jobs: 5}
    ''')
    assert exc.given_kwargs['line'] == 2
    assert 'at least one site' in str(exc)

def test_broken_yaml_and_empty_file():
    invalid('schema: 1\nsites: [a\n')
    assert invalid('').given_kwargs['line'] == 0

def test_workload_needs_one_source():
    invalid('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        workload: {}
    ''')

def test_unknown_scheduler():
    exc = invalid('''
        schema: 1
        scheduler: fifo
        sites:
          - {id: a, cpus: 2}
    ''')
    assert exc.given_kwargs['line'] == 2
    with pytest.raises(exceptions.ScenarioInvalid):
        parse(TWO_SITES, scheduler='fifo')

def test_seed_precedence(monkeypatch):
    text = TWO_SITES.replace('schema: 1', 'schema: 1\nseed: 7')
    assert parse(text).seed == 7
    monkeypatch.setenv('DIANA_SEED', '42')
    assert parse(text).seed == 42
    assert parse(text, seed=3).seed == 3
    monkeypatch.setenv('DIANA_SEED', 'soon')
    with pytest.raises(exceptions.InvalidValue):
        parse(text)

def test_generated_workload_prefix():
    loaded = parse('''
        schema: 1
        seed: 4
        sites:
          - {id: a, cpus: 2, hosts: [d]}
        datasets:
          - {id: d, size_mb: 5}
        workload:
          profile: {jobs_per_day: 1000, inputs_per_job: 1, max_jobs: 10}
    ''')
    assert len(loaded.jobs) == 10
    assert all(job.input_datasets == ('d',) for job in loaded.jobs)
    assert loaded.jobs_for(5) == list(loaded.jobs[:5])
    more = loaded.jobs_for(30)
    assert len(more) == 30
    assert more[:10] == list(loaded.jobs)

def test_synthetic_datasets():
    loaded = parse('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
          - {id: b, cpus: 2}
        links:
          - {src: a, dst: b, bandwidth_mbps: 100}
        synthetic_datasets: {count: 4, replicas: 2}
    ''')
    assert sorted(loaded.topology.datasets) == ['ds000', 'ds001', 'ds002', 'ds003']
    assert all(dataset.replicas == {'a', 'b'} for dataset in loaded.topology.datasets.values())

def test_costs_and_telemetry():
    loaded = parse('''
        schema: 1
        sites:
          - {id: a, cpus: 2}
        costs: {losses_override: 1, nc_site: {a: 0.5}}
        telemetry: {epoch_seconds: 60, noise: 0.1}
    ''')
    assert loaded.costs.losses_override == 1
    assert loaded.costs.nc_site == {'a': 0.5}
    assert loaded.telemetry.epoch_seconds == 60
    settings = loaded.sim_settings(scheduler='random', trace=True)
    assert settings.scheduler == 'random'
    assert settings.telemetry.noise == 0.1
    assert settings.trace

def test_missing_file(tmp_path):
    with pytest.raises(exceptions.ScenarioInvalid):
        scenario.load_scenario(os.path.join(str(tmp_path), 'nope.yaml'))

def test_shipped_scenarios_load(scenario_dir):
    names = sorted(name for name in os.listdir(scenario_dir) if name.endswith('.yaml'))
    assert names == [
        'export_hotspot.yaml',
        'heterogeneous.yaml',
        'minimal.yaml',
        'replica_bandwidth.yaml',
        'worked_example.yaml',
    ]
    for name in names:
        loaded = scenario.load_scenario(os.path.join(scenario_dir, name))
        assert loaded.name == name[:-len('.yaml')]
        assert loaded.jobs

def test_worked_example_file(scenario_dir):
    loaded = scenario.load_scenario(os.path.join(scenario_dir, 'worked_example.yaml'))
    snapshot = loaded.snapshot()
    assert snapshot.total_waiting_jobs == 1000
    assert snapshot.per_site_load['uk'] == pytest.approx(20 / 30)
    assert loaded.weights.w7 == 20
    assert loaded.oracle()('japan', 'uk') == 1 / 10240

import math

import pytest

from diana_modules import exceptions
from diana_modules import gridmodel
from diana_modules import workload

from tests import builders

DAY = workload.SECONDS_PER_DAY

def grid(with_datasets=True):
    site_ids = ['a', 'b', 'c']
    sites = [gridmodel.SiteDescriptor(site_id, 4) for site_id in site_ids]
    datasets = workload.synthesize_datasets(6, site_ids, seed=1) if with_datasets else []
    return gridmodel.validate_topology(sites, builders.full_mesh(site_ids), datasets)

def test_arrival_rate():
    days = 40
    jobs = workload.generate(workload.WorkloadProfile(jobs_per_day=250, seed=3), days * DAY, grid())
    expected = 250 * days
    assert abs(len(jobs) - expected) <= 4 * math.sqrt(expected)

def test_arrivals_increase_within_horizon():
    jobs = workload.generate(workload.WorkloadProfile(jobs_per_day=5000, seed=4), DAY, grid())
    times = [job.submit_time for job in jobs]
    assert all(before < after for (before, after) in zip(times, times[1:]))
    assert times[-1] <= DAY
    assert [job.id for job in jobs[:3]] == ['job00000', 'job00001', 'job00002']

def test_no_bulk_by_default():
    jobs = workload.generate(workload.WorkloadProfile(seed=5), 10 * DAY, grid())
    assert all(job.sub_job_count == 1 for job in jobs)

def test_bulk_fraction():
    profile = workload.WorkloadProfile(seed=5, bulk_fraction=1, sub_jobs_per_bundle=(2, 4))
    jobs = workload.generate(profile, 2 * DAY, grid())
    assert jobs
    assert all(2 <= job.sub_job_count <= 4 for job in jobs)

def test_seed_determinism():
    topology = grid()
    profile = workload.WorkloadProfile(seed=6, bulk_fraction=0.3)
    assert workload.generate(profile, DAY, topology) == workload.generate(profile, DAY, topology)
    other = workload.WorkloadProfile(seed=7, bulk_fraction=0.3)
    assert workload.generate(other, DAY, topology) != workload.generate(profile, DAY, topology)

def test_max_jobs_is_a_prefix():
    topology = grid()
    long = workload.generate(workload.WorkloadProfile(seed=8, max_jobs=100), None, topology)
    short = workload.generate(workload.WorkloadProfile(seed=8, max_jobs=25), None, topology)
    assert len(long) == 100
    assert short == long[:25]

def test_needs_a_horizon_or_a_cap():
    with pytest.raises(exceptions.InvalidValue):
        workload.generate(workload.WorkloadProfile(), None, grid())

def test_jobs_respect_the_profile():
    topology = grid()
    profile = workload.WorkloadProfile(
        seed=9,
        inputs_per_job=(1, 2),
        demand_distribution=(100, 200),
        submit_sites=('b',),
        dataset_pool=('ds000', 'ds001', 'ds002'),
    )
    jobs = workload.generate(profile, DAY, topology)
    for job in jobs:
        assert job.submit_site == 'b'
        assert 1 <= len(job.input_datasets) <= 2
        assert set(job.input_datasets) <= {'ds000', 'ds001', 'ds002'}
        assert len(set(job.input_datasets)) == len(job.input_datasets)
        assert 100 <= job.compute_demand <= 200
    # The generated jobs fit the topology they were drawn from.
    gridmodel.revalidate(topology, jobs)

def test_empty_dataset_pool():
    with pytest.raises(exceptions.EmptyDatasetPool):
        workload.generate(workload.WorkloadProfile(inputs_per_job=(1, 3)), DAY, grid(with_datasets=False))
    jobs = workload.generate(workload.WorkloadProfile(inputs_per_job=(0, 3), seed=2), DAY, grid(with_datasets=False))
    assert all(job.input_datasets == () for job in jobs)

def test_pool_smaller_than_the_minimum():
    profile = workload.WorkloadProfile(inputs_per_job=(4, 5), dataset_pool=('ds000', 'ds001', 'ds002'))
    with pytest.raises(exceptions.InvalidValue):
        workload.generate(profile, DAY, grid())
    # The maximum is only a ceiling.
    profile = workload.WorkloadProfile(inputs_per_job=(3, 9), dataset_pool=('ds000', 'ds001', 'ds002'), seed=1)
    jobs = workload.generate(profile, DAY, grid())
    assert jobs
    assert all(len(job.input_datasets) == 3 for job in jobs)

def test_unknown_pool_dataset():
    with pytest.raises(exceptions.UnknownDataset):
        workload.generate(workload.WorkloadProfile(dataset_pool=('nope',)), DAY, grid())

def test_profile_validation():
    with pytest.raises(exceptions.InvalidValue):
        workload.WorkloadProfile(jobs_per_day=0)
    with pytest.raises(exceptions.InvalidValue):
        workload.WorkloadProfile(bulk_fraction=1.5)
    with pytest.raises(exceptions.InvalidValue):
        workload.WorkloadProfile(demand_distribution=(10, 5))
    with pytest.raises(exceptions.InvalidValue):
        workload.WorkloadProfile(sub_jobs_per_bundle=(0, 2))

def test_synthesized_dataset_sizes():
    datasets = workload.synthesize_datasets(200, ['a', 'b', 'c'], seed=10, replicas=2)
    low = 30 * workload.DATASET_SCALE * 1024
    high = 1300 * workload.DATASET_SCALE * 1024
    for dataset in datasets:
        assert low * (1 - 1e-9) <= dataset.size_mb <= high * (1 + 1e-9)
        assert len(dataset.replicas) == 2
    assert datasets[0].id == 'ds000'
    with pytest.raises(exceptions.InvalidValue):
        workload.synthesize_datasets(1, ['a'], replicas=2)

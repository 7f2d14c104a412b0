import dataclasses
import itertools
import threading

import numpy
import pytest

from diana_modules import costengine
from diana_modules import exceptions
from diana_modules import gridmodel
from diana_modules import matchmaker

from tests import builders

FIVE_SITES = {
    'italy': {'austria': 50, 'switzerland': 45, 'uk': 60, 'japan': 90},
    'austria': {'italy': 58, 'switzerland': 48, 'uk': 65, 'japan': 72},
    'switzerland': {'italy': 64, 'austria': 42, 'uk': 38, 'japan': 85},
    'uk': {'italy': 72, 'austria': 65, 'switzerland': 50, 'japan': 65},
    'japan': {'italy': 70, 'austria': 72, 'switzerland': 85, 'uk': 65},
}

# PINNED MATRIX ####################################################################################

def test_pinned_matrix_cells():
    matrix = matchmaker.CostMatrix.from_rows(FIVE_SITES)
    assert matrix[('italy', 'austria')] == 50
    assert matrix[('austria', 'italy')] == 58
    assert matrix[('japan', 'italy')] == 70
    assert len(matrix.cells) == 5 * 4

def test_pinned_matrix_selection():
    matrix = matchmaker.CostMatrix.from_rows(FIVE_SITES)
    assert matrix.best_for('italy') == 'switzerland'
    assert matrix.best_for('switzerland') == 'uk'
    assert matrix.best_for('austria') == 'switzerland'
    # Not part of the matrix: the cheapest cell anywhere.
    assert matrix.best_for('germany') == 'uk'

def test_matrix_rejects_holes_and_negative_costs():
    with pytest.raises(exceptions.MissingLink):
        matchmaker.CostMatrix(sites=('a', 'b'), cells={('a', 'b'): 1})
    with pytest.raises(exceptions.InvalidValue):
        matchmaker.CostMatrix(sites=('a', 'b'), cells={('a', 'b'): 1, ('b', 'a'): -1})

def test_row_ties_break_by_site_id():
    matrix = matchmaker.CostMatrix.from_rows({
        'a': {'c': 5, 'b': 5},
        'b': {'a': 1, 'c': 1},
        'c': {'a': 1, 'b': 1},
    })
    assert matrix.best_for('a') == 'b'

# WORKED EXAMPLE ###################################################################################

def test_worked_example_selects_uk():
    (topology, job, snapshot, nc) = builders.worked_example()
    placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, builders.WORKED_WEIGHTS)
    assert placement.exec_site == 'uk'
    assert placement.chosen_replicas == {'higgs': 'japan'}
    assert placement.breakdown.total == pytest.approx(283.34, rel=0.005)

def test_worked_example_explanation():
    (topology, job, snapshot, nc) = builders.worked_example()
    explanation = matchmaker.explain_job(job, topology, snapshot, nc, builders.WORKED_WEIGHTS)
    totals = {row.site: row.total for row in explanation.rows}
    assert totals['japan'] == 700
    assert totals['switzerland'] == pytest.approx(10341.4, rel=0.005)
    assert totals['uk'] == pytest.approx(283.34, rel=0.005)
    selected = [row.site for row in explanation.rows if row.selected]
    assert selected == ['uk']
    assert set(explanation.matrix.sites) == {'japan', 'switzerland', 'uk'}
    assert len(explanation.matrix.cells) == 6

# SHORTLIST ########################################################################################

def grid(n_sites, queues=None):
    site_ids = ['s%02d' % index for index in range(n_sites)]
    sites = [gridmodel.SiteDescriptor(site_id, 8) for site_id in site_ids]
    job = gridmodel.JobDescriptor('j', site_ids[0])
    topology = gridmodel.validate_topology(sites, builders.full_mesh(site_ids), [], jobs=[job])
    snapshot = costengine.GlobalLoadSnapshot.from_queues(topology.sites, queues or {})
    nc = costengine.NetworkCostOracle(topology.links, gridmodel.WeightVector())
    return (topology, job, snapshot, nc)

def test_shortlist_length():
    (topology, job, snapshot, nc) = grid(3)
    assert matchmaker.shortlist_sites(job, topology, snapshot, nc, gridmodel.WeightVector(), k=5) == ['s00', 's01', 's02']
    (topology, job, snapshot, nc) = grid(12, queues={'s00': 3, 's05': 1})
    shortlist = matchmaker.shortlist_sites(job, topology, snapshot, nc, gridmodel.WeightVector(), k=5)
    assert len(shortlist) == 5
    assert 's00' not in shortlist
    assert 's05' not in shortlist
    assert shortlist == ['s01', 's02', 's03', 's04', 's06']

def test_shortlist_rejects_bad_k():
    (topology, job, snapshot, nc) = grid(2)
    with pytest.raises(exceptions.InvalidValue):
        matchmaker.shortlist_sites(job, topology, snapshot, nc, gridmodel.WeightVector(), k=0)

def test_two_site_shortlist_matrix():
    (topology, job, snapshot, nc) = grid(2)
    matrix = matchmaker.build_cost_matrix(['s00', 's01'], job, topology, snapshot, nc, gridmodel.WeightVector())
    assert set(matrix.cells) == {('s00', 's01'), ('s01', 's00')}
    # Symmetric metrics and identical sites.
    assert matrix[('s00', 's01')] == matrix[('s01', 's00')]

def test_single_site():
    sites = [gridmodel.SiteDescriptor('solo', 2)]
    job = gridmodel.JobDescriptor('j', 'solo')
    topology = gridmodel.validate_topology(sites, [], [], jobs=[job])
    snapshot = costengine.GlobalLoadSnapshot.from_queues(topology.sites, {'solo': 4})
    w = gridmodel.WeightVector()
    nc = costengine.NetworkCostOracle(topology.links, w)
    placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, w)
    assert placement.exec_site == 'solo'
    expected = costengine.total_cost(job, {}, 'solo', 'solo', snapshot, nc, w, topology)
    assert placement.breakdown == expected

def test_min_power_and_exclude():
    sites = [
        gridmodel.SiteDescriptor('a', 8, power_per_cpu=1),
        gridmodel.SiteDescriptor('b', 8, power_per_cpu=2),
        gridmodel.SiteDescriptor('c', 8, power_per_cpu=2),
    ]
    job = gridmodel.JobDescriptor('j', 'a', min_power=2)
    topology = gridmodel.validate_topology(sites, builders.full_mesh(['a', 'b', 'c']), [], jobs=[job])
    snapshot = costengine.GlobalLoadSnapshot.empty(topology.sites)
    w = gridmodel.WeightVector()
    nc = costengine.NetworkCostOracle(topology.links, w)
    placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, w)
    assert placement.exec_site == 'b'
    placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, w, exclude=['b'])
    assert placement.exec_site == 'c'
    with pytest.raises(exceptions.NoCandidateSite):
        matchmaker.get_best_computing_element(job, topology, snapshot, nc, w, exclude=['b', 'c'])

# PROPERTIES #######################################################################################

def brute_force(job, topology, snapshot, nc, w):
    best = None
    for exec_site in topology.site_ids:
        choices = [sorted(topology.dataset(dataset_id).replicas) for dataset_id in job.input_datasets]
        for combination in itertools.product(*choices):
            data_sites = dict(zip(job.input_datasets, combination))
            total = costengine.total_cost(job, data_sites, exec_site, job.submit_site, snapshot, nc, w, topology).total
            if best is None or (total, exec_site) < best:
                best = (total, exec_site)
    return best

def test_matches_brute_force():
    rng = numpy.random.default_rng(1234)
    for trial in range(1000):
        (topology, job, snapshot, weights) = builders.random_topology(rng)
        nc = costengine.NetworkCostOracle(topology.links, weights)
        placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, weights, k=5)
        (total, exec_site) = brute_force(job, topology, snapshot, nc, weights)
        assert placement.exec_site == exec_site, trial
        assert placement.breakdown.total == pytest.approx(total, rel=1e-12), trial
        for (dataset_id, replica_site) in placement.chosen_replicas.items():
            assert replica_site in topology.dataset(dataset_id).replicas

def scaled_weights(weights, factor):
    # NC already carries w1..w3 into the transfer terms, so w8..w10 stay.
    values = weights.as_dict()
    for name in ('w1', 'w2', 'w3', 'w5', 'w6', 'w7'):
        values[name] = values[name] * factor
    return gridmodel.WeightVector(**values)

def test_weight_scaling_keeps_the_choice():
    rng = numpy.random.default_rng(99)
    for trial in range(1000):
        (topology, job, snapshot, weights) = builders.random_topology(rng)
        nc = costengine.NetworkCostOracle(topology.links, weights)
        placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, weights)
        for factor in (2, 0.5):
            scaled = scaled_weights(weights, factor)
            again = matchmaker.get_best_computing_element(job, topology, snapshot, nc.with_weights(scaled), scaled)
            assert again.exec_site == placement.exec_site, trial
            assert again.chosen_replicas == placement.chosen_replicas, trial
            assert again.breakdown.total == pytest.approx(placement.breakdown.total * factor, rel=1e-12)

def test_scaling_every_weight_with_pinned_losses():
    # With losses pinned NC no longer depends on w1..w3, so every weight can move.
    rng = numpy.random.default_rng(100)
    settings = costengine.CostSettings(losses_override=1)
    for trial in range(1000):
        (topology, job, snapshot, weights) = builders.random_topology(rng)
        nc = costengine.NetworkCostOracle(topology.links, weights, settings)
        placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, weights)
        for factor in (2, 0.5, 7):
            scaled = weights.scaled(factor)
            again = matchmaker.get_best_computing_element(job, topology, snapshot, nc.with_weights(scaled), scaled)
            assert again.exec_site == placement.exec_site, trial
            assert again.chosen_replicas == placement.chosen_replicas, trial
            assert again.breakdown.total == pytest.approx(placement.breakdown.total * factor, rel=1e-12)

def with_queue(snapshot, topology, site_id, queue):
    queues = dict(snapshot.per_site_queue)
    queues[site_id] = queue
    loads = dict(snapshot.per_site_load)
    loads[site_id] = queue / topology.sites[site_id].power
    # Only Q_i moves; the global Q stays where it was.
    return dataclasses.replace(snapshot, per_site_queue=queues, per_site_load=loads)

def test_queue_repulsion():
    rng = numpy.random.default_rng(77)
    checked = 0
    for trial in range(1000):
        (topology, job, snapshot, weights) = builders.random_topology(rng)
        if len(topology.sites) < 2:
            continue
        nc = costengine.NetworkCostOracle(topology.links, weights)
        chosen = matchmaker.get_best_computing_element(job, topology, snapshot, nc, weights).exec_site
        for site_id in topology.site_ids:
            if site_id == chosen:
                continue
            busier = with_queue(snapshot, topology, site_id, snapshot.per_site_queue[site_id] + 50)
            again = matchmaker.get_best_computing_element(job, topology, busier, nc, weights).exec_site
            assert again != site_id
        flooded = with_queue(snapshot, topology, chosen, 10 ** 12)
        again = matchmaker.get_best_computing_element(job, topology, flooded, nc, weights).exec_site
        assert again != chosen
        checked += 1
    assert checked > 500

def test_selected_site_is_shortlisted():
    rng = numpy.random.default_rng(3)
    for trial in range(300):
        (topology, job, snapshot, weights) = builders.random_topology(rng)
        nc = costengine.NetworkCostOracle(topology.links, weights)
        for k in (1, 2, 3):
            shortlist = matchmaker.shortlist_sites(job, topology, snapshot, nc, weights, k=k)
            placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, weights, k=k)
            assert placement.exec_site in shortlist
            assert len(shortlist) == min(k, len(topology.sites))

def test_job_without_inputs():
    (topology, job, snapshot, nc) = grid(3, queues={'s00': 5})
    placement = matchmaker.get_best_computing_element(job, topology, snapshot, nc, gridmodel.WeightVector())
    assert placement.chosen_replicas == {}
    assert placement.exec_site == 's01'

# CACHE ############################################################################################

def test_cache_reuses_matrices_within_an_epoch():
    (topology, job, snapshot, nc) = builders.worked_example()
    cache = matchmaker.MatrixCache()
    w = builders.WORKED_WEIGHTS
    first = matchmaker.get_best_computing_element(job, topology, snapshot, nc, w, cache=cache, epoch=1)
    other = dataclasses.replace(job, id='other')
    second = matchmaker.get_best_computing_element(other, topology, snapshot, nc, w, cache=cache, epoch=1)
    assert (cache.hits, cache.misses) == (1, 1)
    assert second.exec_site == first.exec_site
    matchmaker.get_best_computing_element(job, topology, snapshot, nc, w, cache=cache, epoch=2)
    assert cache.misses == 2
    assert len(cache) == 1

def test_cache_answers_like_a_fresh_build():
    (topology, job, snapshot, nc) = builders.worked_example()
    w = builders.WORKED_WEIGHTS
    fresh = matchmaker.get_best_computing_element(job, topology, snapshot, nc, w)
    cache = matchmaker.MatrixCache()
    results = []
    def worker():
        for repeat in range(20):
            results.append(matchmaker.get_best_computing_element(job, topology, snapshot, nc, w, cache=cache, epoch=0))
    threads = [threading.Thread(target=worker) for index in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(results) == 80
    assert all(result == fresh for result in results)

'''
In-process Data Location Service: lists the replicas of a dataset and ranks
them by their cost of reaching a computing element.
'''
import dataclasses

from . import common
from . import exceptions

@dataclasses.dataclass(frozen=True)
class ReplicaEntry:
    replica_site: str
    transfer_cost: float
    estimated_transfer_seconds: float

@dataclasses.dataclass(frozen=True)
class ReplicaRanking:
    dataset: str
    target_ce: str
    entries: tuple
    # Number of replicas before pagination.
    total: int = 0

    @property
    def best(self):
        return self.entries[0]

def list_replicas(dataset_id, topology):
    return set(topology.dataset(dataset_id).replicas)

def rank_replicas(dataset_id, ce, topology, nc, offset=0, limit=None):
    '''
    Rank every replica of `dataset_id` by size_mb * nc(replica, ce), cheapest
    first, ties by site id.

    nc: a costengine.NetworkCostOracle. The same oracle prices the input term
        of the data transfer cost, so the best replica here is the one the
        total cost would pick. Under losses_override the ranking is by
        bandwidth alone and RTT plays no part.
    offset, limit: pagination window over the sorted entries. The default
        returns all of them.
    '''
    if offset < 0:
        raise exceptions.InvalidValue('offset', 'nonnegative', offset)
    if limit is not None and limit < 1:
        raise exceptions.InvalidValue('limit', 'at least 1', limit)
    topology.site(ce)
    dataset = topology.dataset(dataset_id)

    entries = []
    for replica_site in sorted(dataset.replicas):
        if replica_site == ce:
            cost = 0.0
        else:
            cost = dataset.size_mb * nc(replica_site, ce)
        seconds = nc.transfer_seconds(dataset.size_mb, replica_site, ce)
        entries.append(ReplicaEntry(replica_site, cost, seconds))

    entries.sort(key=lambda entry: (entry.transfer_cost, entry.replica_site))
    total = len(entries)
    if limit is None:
        entries = entries[offset:]
    else:
        entries = entries[offset:offset + limit]
    common.log.debug('Ranked %d replicas of %s for %s.', total, dataset_id, ce)
    return ReplicaRanking(dataset=dataset_id, target_ce=ce, entries=tuple(entries), total=total)

def get_best_storage_element(dataset_id, best_ce, topology, nc):
    return rank_replicas(dataset_id, best_ce, topology, nc).best.replica_site

def best_replicas(job, ce, topology, nc):
    '''
    Per-dataset best replica for every input of `job` against `ce`.
    '''
    return {
        dataset_id: get_best_storage_element(dataset_id, ce, topology, nc)
        for dataset_id in job.input_datasets
    }

'''
Placement policies. Every policy has the signature
place(job, context, exclude=()) -> matchmaker.Placement and differs from the
others only in how it picks the execution site, so comparing them isolates
the scheduling decision.
'''
import dataclasses

from . import common
from . import costengine
from . import exceptions
from . import matchmaker
from . import replicas

@dataclasses.dataclass
class MatchContext:
    '''
    What a policy may look at when placing a job.

    nc: the oracle over the link metrics the scheduler believes in, which in
        the simulator is the telemetry window average.
    rng: numpy Generator, used only by the random policy.
    '''
    topology: object
    snapshot: costengine.GlobalLoadSnapshot
    nc: costengine.NetworkCostOracle
    w: object
    k: int = common.DEFAULT_SHORTLIST_K
    rng: object = None
    now: float = 0.0
    epoch: int = 0
    cache: matchmaker.MatrixCache = None

def _placement(job, exec_site, context):
    chosen = replicas.best_replicas(job, exec_site, context.topology, context.nc)
    breakdown = costengine.total_cost(
        job,
        chosen,
        exec_site,
        job.submit_site,
        context.snapshot,
        context.nc,
        context.w,
        context.topology,
    )
    return matchmaker.Placement(
        job=job.id,
        exec_site=exec_site,
        chosen_replicas=chosen,
        breakdown=breakdown,
        decided_at=context.now,
    )

def _candidates(job, context, exclude):
    exclude = set(exclude)
    return [
        site_id for site_id in context.topology.site_ids
        if site_id not in exclude
        and context.topology.sites[site_id].power_per_cpu >= job.min_power
    ]

def place_diana(job, context, exclude=()):
    return matchmaker.get_best_computing_element(
        job,
        context.topology,
        context.snapshot,
        context.nc,
        context.w,
        k=context.k,
        exclude=exclude,
        decided_at=context.now,
        cache=context.cache,
        epoch=context.epoch,
    )

def place_data_local(job, context, exclude=()):
    '''
    Among the sites holding a replica of any input, the one with the
    shortest waiting queue. Jobs without input consider every site.
    '''
    candidates = _candidates(job, context, exclude)
    if job.input_datasets:
        hosts = set()
        for dataset_id in job.input_datasets:
            hosts.update(context.topology.dataset(dataset_id).replicas)
        candidates = [site_id for site_id in candidates if site_id in hosts]
    if not candidates:
        raise exceptions.NoCandidateSite(job.id)
    queues = context.snapshot.per_site_queue
    exec_site = min(candidates, key=lambda site_id: (queues[site_id], site_id))
    return _placement(job, exec_site, context)

def place_compute_greedy(job, context, exclude=()):
    candidates = _candidates(job, context, exclude)
    if not candidates:
        raise exceptions.NoCandidateSite(job.id)
    def cost(site_id):
        site = context.topology.sites[site_id]
        return (costengine.compute_cost(site, context.snapshot, context.w), site_id)
    return _placement(job, min(candidates, key=cost), context)

def place_random(job, context, exclude=()):
    candidates = _candidates(job, context, exclude)
    if not candidates:
        raise exceptions.NoCandidateSite(job.id)
    exec_site = candidates[int(context.rng.integers(len(candidates)))]
    return _placement(job, exec_site, context)

POLICIES = {
    'diana': place_diana,
    'data_local': place_data_local,
    'compute_greedy': place_compute_greedy,
    'random': place_random,
}

def get_policy(name):
    try:
        return POLICIES[name]
    except KeyError:
        raise exceptions.UnknownScheduler(name, ', '.join(POLICIES))

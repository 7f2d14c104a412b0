'''
Matchmaking: shortlist candidate sites, price every ordered pair of them in
a cost matrix, and pick the execution site and replicas for a job.
'''
import dataclasses
import threading

from . import common
from . import costengine
from . import exceptions
from . import replicas

@dataclasses.dataclass(frozen=True)
class CostMatrix:
    '''
    sites: the shortlist, in shortlist order.
    cells: (from, to) -> total cost for every ordered off-diagonal pair.
    diagonal: site -> total cost of executing at the submitting site itself.
    breakdowns: (from, to) -> CostBreakdown, diagonal pairs included. Empty
        for matrices built from pinned totals.
    chosen_replicas: exec site -> {dataset: replica site}.
    '''
    sites: tuple
    cells: dict
    diagonal: dict = dataclasses.field(default_factory=dict)
    breakdowns: dict = dataclasses.field(default_factory=dict)
    chosen_replicas: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        for a in self.sites:
            for b in self.sites:
                if a != b and (a, b) not in self.cells:
                    raise exceptions.MissingLink(a, b)
        for (pair, cost) in self.cells.items():
            if cost < 0:
                raise exceptions.InvalidValue(f'cost {pair}', 'nonnegative', cost)

    @classmethod
    def from_rows(cls, rows, diagonal=None):
        '''
        Build a matrix from pinned totals, {from: {to: cost}}.
        '''
        sites = sorted(set(rows).union(*(row.keys() for row in rows.values())))
        cells = {
            (src, dst): cost
            for (src, row) in rows.items()
            for (dst, cost) in row.items()
            if src != dst
        }
        return cls(sites=tuple(sites), cells=cells, diagonal=dict(diagonal or {}))

    def __getitem__(self, pair):
        (src, dst) = pair
        if src == dst:
            return self.diagonal[src]
        return self.cells[pair]

    def row(self, site):
        '''
        Candidate costs from `site`: every off-diagonal cell of its row plus
        its own diagonal entry when known.
        '''
        row = {dst: cost for ((src, dst), cost) in self.cells.items() if src == site}
        if site in self.diagonal:
            row[site] = self.diagonal[site]
        return row

    def best_for(self, site):
        '''
        Row argmin for a job submitted from `site`, ties by site id. When
        `site` is not in the matrix, the matrix-wide minimum is used.
        '''
        if site in self.sites:
            candidates = self.row(site).items()
        else:
            candidates = [(dst, cost) for ((src, dst), cost) in self.cells.items()]
            candidates.extend(self.diagonal.items())
        if not candidates:
            raise exceptions.NoCandidateSite(site)
        (best, _) = min(candidates, key=lambda pair: (pair[1], pair[0]))
        return best

@dataclasses.dataclass(frozen=True)
class Placement:
    job: str
    exec_site: str
    chosen_replicas: dict
    breakdown: costengine.CostBreakdown
    decided_at: float = 0.0

def _candidates(job, topology, exclude):
    exclude = set(exclude)
    candidates = [
        site_id for site_id in topology.site_ids
        if site_id not in exclude
        and topology.sites[site_id].power_per_cpu >= job.min_power
    ]
    if not candidates:
        raise exceptions.NoCandidateSite(job.id)
    return candidates

def shortlist_sites(job, topology, snapshot, nc, w, k=common.DEFAULT_SHORTLIST_K, exclude=()):
    '''
    Rank candidate sites by compute cost plus the cost of bringing the job's
    data there from the cheapest replicas, and keep the best k.

    The data term is priced as if the job were submitted from the candidate
    itself, so the shortlist does not depend on who submitted.
    '''
    if k < 1:
        raise exceptions.InvalidValue('shortlist_k', 'at least 1', k)
    scored = []
    for site_id in _candidates(job, topology, exclude):
        chosen = replicas.best_replicas(job, site_id, topology, nc)
        score = (
            costengine.compute_cost(topology.sites[site_id], snapshot, w) +
            costengine.data_transfer_cost(job, chosen, site_id, site_id, nc, w, topology)
        )
        scored.append((score, site_id))
    scored.sort()
    return [site_id for (score, site_id) in scored[:k]]

def build_cost_matrix(shortlist, job, topology, snapshot, nc, w):
    '''
    Price every ordered pair (i, j) of the shortlist as total_cost with
    submission site i and execution site j, reading each dataset from its
    best replica relative to j.
    '''
    if not shortlist:
        raise exceptions.NoCandidateSite(job.id)
    chosen_replicas = {
        exec_site: replicas.best_replicas(job, exec_site, topology, nc)
        for exec_site in shortlist
    }
    cells = {}
    diagonal = {}
    breakdowns = {}
    for submit_site in shortlist:
        for exec_site in shortlist:
            breakdown = costengine.total_cost(
                job,
                chosen_replicas[exec_site],
                exec_site,
                submit_site,
                snapshot,
                nc,
                w,
                topology,
            )
            breakdowns[(submit_site, exec_site)] = breakdown
            if submit_site == exec_site:
                diagonal[submit_site] = breakdown.total
            else:
                cells[(submit_site, exec_site)] = breakdown.total
    return CostMatrix(
        sites=tuple(shortlist),
        cells=cells,
        diagonal=diagonal,
        breakdowns=breakdowns,
        chosen_replicas=chosen_replicas,
    )

def job_signature(job, topology):
    '''
    Everything about a job that changes its cost matrix, the replica catalog
    of its inputs included. The submitting site is not part of it: the
    matrix holds every row.
    '''
    inputs = tuple(
        (dataset_id, tuple(sorted(topology.dataset(dataset_id).replicas)))
        for dataset_id in job.input_datasets
    )
    return (inputs, job.executable_mb, job.output_mb, job.sub_job_count, job.min_power)

class MatrixCache:
    '''
    Cost matrices of the current telemetry epoch. Moving to a new epoch
    drops every entry at once.
    '''
    def __init__(self):
        self._lock = threading.Lock()
        self._epoch = None
        self._matrices = {}
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._matrices)

    def get_or_build(self, epoch, key, build):
        with self._lock:
            if epoch != self._epoch:
                self._epoch = epoch
                self._matrices = {}
            matrix = self._matrices.get(key)
            if matrix is not None:
                self.hits += 1
                return matrix
        matrix = build()
        with self._lock:
            if epoch == self._epoch:
                self._matrices[key] = matrix
            self.misses += 1
        return matrix

def get_best_computing_element(
        job,
        topology,
        snapshot,
        nc,
        w,
        k=common.DEFAULT_SHORTLIST_K,
        exclude=(),
        decided_at=0.0,
        cache=None,
        epoch=0,
    ):
    '''
    Shortlist, build the cost matrix and select the execution site from the
    submitting site's row. Replicas are the best storage elements for the
    chosen site.
    '''
    exclude = tuple(sorted(set(exclude)))
    def build():
        shortlist = shortlist_sites(job, topology, snapshot, nc, w, k=k, exclude=exclude)
        return build_cost_matrix(shortlist, job, topology, snapshot, nc, w)

    if cache is None:
        matrix = build()
    else:
        key = (snapshot.key(), job_signature(job, topology), exclude, k)
        matrix = cache.get_or_build(epoch, key, build)

    exec_site = matrix.best_for(job.submit_site)
    chosen = matrix.chosen_replicas[exec_site]
    breakdown = matrix.breakdowns.get((job.submit_site, exec_site))
    if breakdown is None:
        breakdown = costengine.total_cost(job, chosen, exec_site, job.submit_site, snapshot, nc, w, topology)
    common.log.debug('Placed %s at %s, total cost %s.', job.id, exec_site, common.format_float(breakdown.total))
    return Placement(
        job=job.id,
        exec_site=exec_site,
        chosen_replicas=dict(chosen),
        breakdown=breakdown,
        decided_at=decided_at,
    )

@dataclasses.dataclass(frozen=True)
class ExplainRow:
    site: str
    data_transfer_cost: float
    compute_cost: float
    network_cost: float
    total: float
    selected: bool

@dataclasses.dataclass(frozen=True)
class Explanation:
    job: str
    submit_site: str
    shortlist: tuple
    rows: tuple
    matrix: CostMatrix
    placement: Placement

def explain_job(job, topology, snapshot, nc, w, k=common.DEFAULT_SHORTLIST_K, exclude=()):
    '''
    Everything behind one placement decision: the per-candidate cost terms
    relative to the submitting site, the full matrix, and the decision.
    '''
    placement = get_best_computing_element(job, topology, snapshot, nc, w, k=k, exclude=exclude)
    shortlist = shortlist_sites(job, topology, snapshot, nc, w, k=k, exclude=exclude)
    matrix = build_cost_matrix(shortlist, job, topology, snapshot, nc, w)
    rows = []
    for exec_site in shortlist:
        breakdown = matrix.breakdowns.get((job.submit_site, exec_site))
        if breakdown is None:
            chosen = matrix.chosen_replicas[exec_site]
            breakdown = costengine.total_cost(job, chosen, exec_site, job.submit_site, snapshot, nc, w, topology)
        rows.append(ExplainRow(
            site=exec_site,
            data_transfer_cost=breakdown.data_transfer_cost,
            compute_cost=breakdown.compute_cost,
            network_cost=breakdown.network_cost,
            total=breakdown.total,
            selected=(exec_site == placement.exec_site),
        ))
    return Explanation(
        job=job.id,
        submit_site=job.submit_site,
        shortlist=tuple(shortlist),
        rows=tuple(rows),
        matrix=matrix,
        placement=placement,
    )

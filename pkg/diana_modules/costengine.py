'''
The cost model: network, computation and data transfer costs, and their sum.

All of these are pure functions over validated inputs. The only object with
state is NetworkCostOracle, and it is read-only after construction.
'''
import dataclasses
import math

from . import common
from . import exceptions
from . import gridmodel

@dataclasses.dataclass(frozen=True)
class CostSettings:
    mss_bytes: int = common.DEFAULT_MSS_BYTES
    loss_floor: float = common.DEFAULT_LOSS_FLOOR
    gb_to_mb: float = common.GB_TO_MB
    # Pins the Losses numerator of the data-transfer network cost. None means
    # "use the weighted RTT/loss/jitter sum".
    losses_override: float = None
    # nc_site(j), the candidate site's own staging cost. Absent sites cost 0.
    nc_site: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not self.mss_bytes > 0:
            raise exceptions.InvalidValue('mss_bytes', 'positive', self.mss_bytes)
        if not 0 < self.loss_floor <= 1:
            raise exceptions.InvalidValue('loss_floor', 'in (0, 1]', self.loss_floor)
        if self.losses_override is not None and self.losses_override < 0:
            raise exceptions.InvalidValue('losses_override', 'nonnegative', self.losses_override)

@dataclasses.dataclass(frozen=True)
class CostBreakdown:
    network_cost: float
    compute_cost: float
    data_transfer_cost: float
    total: float

    @classmethod
    def of(cls, network_cost, compute_cost, data_transfer_cost):
        total = network_cost + compute_cost + data_transfer_cost
        return cls(network_cost, compute_cost, data_transfer_cost, total)

@dataclasses.dataclass(frozen=True)
class GlobalLoadSnapshot:
    '''
    Q, Q_i and SiteLoad_i as seen by the matchmaker at one moment.
    '''
    total_waiting_jobs: int
    per_site_queue: dict
    per_site_load: dict

    @classmethod
    def from_queues(cls, sites, queues, reported_load_jobs=None):
        '''
        sites: mapping of site id to SiteDescriptor.
        queues: mapping of site id to waiting job count; missing sites are 0.
        reported_load_jobs: optional mapping of site id to the job count the
            information service reports for SiteLoad. Without it,
            SiteLoad_i = Q_i / P_i.
        '''
        reported_load_jobs = reported_load_jobs or {}
        per_site_queue = {}
        per_site_load = {}
        for (site_id, site) in sites.items():
            queue = int(queues.get(site_id, 0))
            if queue < 0:
                raise exceptions.InvalidValue(f'{site_id} queue', 'nonnegative', queue)
            per_site_queue[site_id] = queue
            load_jobs = reported_load_jobs.get(site_id, queue)
            per_site_load[site_id] = load_jobs / site.power
        return cls(
            total_waiting_jobs=sum(per_site_queue.values()),
            per_site_queue=per_site_queue,
            per_site_load=per_site_load,
        )

    @classmethod
    def empty(cls, sites):
        return cls.from_queues(sites, {})

    def key(self):
        return (self.total_waiting_jobs, tuple(sorted(self.per_site_queue.items())))

    def with_total(self, total_waiting_jobs):
        '''
        Pin Q independently of the per-site queues, for Grids where the
        information service sees more sites than the topology lists.
        '''
        return dataclasses.replace(self, total_waiting_jobs=total_waiting_jobs)

def mathis_rate(mss_bytes, rtt_ms, loss_rate):
    '''
    Upper bound on the TCP transfer rate, in bytes per second:
    (MSS / RTT) * (1 / sqrt(loss)).
    '''
    if mss_bytes <= 0:
        raise exceptions.InvalidValue('mss_bytes', 'positive', mss_bytes)
    if rtt_ms == 0:
        raise exceptions.ZeroRtt()
    if loss_rate == 0:
        raise exceptions.ZeroLoss()
    if rtt_ms < 0:
        raise exceptions.InvalidValue('rtt_ms', 'positive', rtt_ms)
    if not 0 < loss_rate <= 1:
        raise exceptions.InvalidValue('loss_rate', 'in (0, 1]', loss_rate)
    rtt_seconds = rtt_ms / 1000
    return (mss_bytes / rtt_seconds) * (1 / math.sqrt(loss_rate))

def effective_rate_mbps(metrics, settings=CostSettings()):
    '''
    The rate a bulk transfer actually gets: the nominal bandwidth, capped by
    the Mathis bound with the loss floored at settings.loss_floor. An RTT of
    zero leaves the nominal bandwidth uncapped.
    '''
    if metrics.is_local:
        return math.inf
    if metrics.rtt_ms == 0:
        return metrics.bandwidth_mbps
    loss = max(metrics.loss_rate, settings.loss_floor)
    mathis_mbps = mathis_rate(settings.mss_bytes, metrics.rtt_ms, loss) * 8 / 1e6
    return min(metrics.bandwidth_mbps, mathis_mbps)

def transfer_seconds(size_mb, metrics, settings=CostSettings()):
    if metrics.is_local or size_mb == 0:
        return 0.0
    return size_mb * 8 / effective_rate_mbps(metrics, settings)

def losses(metrics, w):
    return metrics.rtt_ms * w.w1 + metrics.loss_rate * w.w2 + metrics.jitter_ms * w.w3

def network_cost(metrics, w, losses_override=None):
    '''
    NetCost = Losses / Bandwidth, with the proportionality constant fixed to 1.
    Intra-site cost is exactly zero.
    '''
    if metrics.is_local:
        return 0.0
    numerator = losses(metrics, w) if losses_override is None else losses_override
    return numerator / metrics.bandwidth_mbps

def compute_cost(site, snapshot, w):
    '''
    (Q_i / P_i) * w5 + (Q / P_i) * w6 + SiteLoad_i * w7
    '''
    try:
        queue = snapshot.per_site_queue[site.id]
        site_load = snapshot.per_site_load[site.id]
    except KeyError:
        raise exceptions.UnknownSite(site.id)
    power = site.power
    return (
        (queue / power) * w.w5 +
        (snapshot.total_waiting_jobs / power) * w.w6 +
        site_load * w.w7
    )

class NetworkCostOracle:
    '''
    Answers NC(src, dst) for the data-transfer terms and the plain network
    cost for the network component, over one set of link metrics.

    metrics: mapping of (src, dst) to LinkMetrics. Intra-site pairs are
    implicit.
    '''
    def __init__(self, metrics, w, settings=CostSettings()):
        self.metrics = metrics
        self.w = w
        self.settings = settings

    def __call__(self, src, dst):
        return network_cost(self.link(src, dst), self.w, losses_override=self.settings.losses_override)

    def __repr__(self):
        return f'NetworkCostOracle({len(self.metrics)} links)'

    def link(self, src, dst):
        if src == dst:
            return gridmodel.LinkMetrics.local(src)
        try:
            return self.metrics[(src, dst)]
        except KeyError:
            raise exceptions.MissingLink(src, dst)

    def network(self, src, dst):
        return network_cost(self.link(src, dst), self.w)

    def site_cost(self, site_id):
        return self.settings.nc_site.get(site_id, 0.0)

    def transfer_seconds(self, size_mb, src, dst):
        return transfer_seconds(size_mb, self.link(src, dst), self.settings)

    def with_weights(self, w):
        return NetworkCostOracle(self.metrics, w, self.settings)

def _replica_sites_for(job, data_sites):
    if isinstance(data_sites, str):
        return {dataset_id: data_sites for dataset_id in job.input_datasets}
    return data_sites

def data_transfer_cost(job, data_sites, exec_site, submit_site, nc, w, topology, sub_jobs=None):
    '''
    w8 * ID * NC(i, j) + w9 * (AD + OD) * NC(local, j)
    + w10 * (N_j * (ID + AD) + OD) * NC(j)

    data_sites: a single site id i holding every input, or a mapping of
        dataset id to the replica site it is read from.
    sub_jobs: N_j; defaults to the job's sub_job_count.
    '''
    data_sites = _replica_sites_for(job, data_sites)
    input_mb = 0.0
    input_term = 0.0
    for dataset_id in job.input_datasets:
        size_mb = topology.dataset(dataset_id).size_mb
        input_mb += size_mb
        replica_site = data_sites[dataset_id]
        if replica_site != exec_site:
            input_term += size_mb * nc(replica_site, exec_site)
    if sub_jobs is None:
        sub_jobs = job.sub_job_count
    application_mb = job.executable_mb
    output_mb = job.output_mb
    return (
        w.w8 * input_term +
        w.w9 * (application_mb + output_mb) * nc(submit_site, exec_site) +
        w.w10 * (sub_jobs * (input_mb + application_mb) + output_mb) * nc.site_cost(exec_site)
    )

def total_cost(job, data_sites, exec_site, submit_site, snapshot, nc, w, topology):
    '''
    Network cost (submission site to execution site) + computation cost +
    data transfer cost.
    '''
    net = nc.network(submit_site, exec_site)
    compute = compute_cost(topology.site(exec_site), snapshot, w)
    dtc = data_transfer_cost(job, data_sites, exec_site, submit_site, nc, w, topology)
    return CostBreakdown.of(net, compute, dtc)

'''
Domain types shared by every other module, and topology validation.

Units are fixed: data in megabytes, bandwidth in megabits per second, time in
seconds, RTT and jitter in milliseconds.
'''
import dataclasses
import math

from . import exceptions

WEIGHT_NAMES = ['w1', 'w2', 'w3', 'w5', 'w6', 'w7', 'w8', 'w9', 'w10']
WEIGHT_MIN = 1
WEIGHT_MAX = 20

def _require(condition, name, expectation, value):
    if not condition:
        raise exceptions.InvalidValue(name, expectation, value)

@dataclasses.dataclass(frozen=True)
class SiteDescriptor:
    id: str
    cpu_count: int
    power_per_cpu: float = 1.0
    storage_capacity: float = 0
    hosted_datasets: frozenset = frozenset()

    def __post_init__(self):
        _require(isinstance(self.id, str) and self.id, 'site id', 'a nonempty string', self.id)
        _require(self.cpu_count >= 1, f'{self.id}.cpu_count', 'at least 1', self.cpu_count)
        _require(self.power_per_cpu > 0, f'{self.id}.power_per_cpu', 'positive', self.power_per_cpu)
        _require(self.storage_capacity >= 0, f'{self.id}.storage_capacity', 'nonnegative', self.storage_capacity)
        object.__setattr__(self, 'hosted_datasets', frozenset(self.hosted_datasets))

    @property
    def power(self):
        '''
        Total processing power P_i of the site.
        '''
        return self.cpu_count * self.power_per_cpu

@dataclasses.dataclass(frozen=True)
class LinkMetrics:
    src: str
    dst: str
    rtt_ms: float
    loss_rate: float
    jitter_ms: float
    bandwidth_mbps: float
    observed_at: float = 0.0

    def __post_init__(self):
        if not self.bandwidth_mbps > 0:
            raise exceptions.NonPositiveBandwidth(self.src, self.dst, self.bandwidth_mbps)
        _require(self.rtt_ms >= 0, f'{self.src}->{self.dst} rtt_ms', 'nonnegative', self.rtt_ms)
        _require(0 <= self.loss_rate <= 1, f'{self.src}->{self.dst} loss_rate', 'between 0 and 1', self.loss_rate)
        _require(self.jitter_ms >= 0, f'{self.src}->{self.dst} jitter_ms', 'nonnegative', self.jitter_ms)

    @classmethod
    def local(cls, site, observed_at=0.0):
        return cls(
            src=site,
            dst=site,
            rtt_ms=0.0,
            loss_rate=0.0,
            jitter_ms=0.0,
            bandwidth_mbps=math.inf,
            observed_at=observed_at,
        )

    @property
    def is_local(self):
        return self.src == self.dst

@dataclasses.dataclass(frozen=True)
class DatasetDescriptor:
    id: str
    size_mb: float
    replicas: frozenset

    def __post_init__(self):
        _require(self.size_mb > 0, f'{self.id}.size_mb', 'positive', self.size_mb)
        object.__setattr__(self, 'replicas', frozenset(self.replicas))
        _require(len(self.replicas) > 0, f'{self.id}.replicas', 'nonempty', sorted(self.replicas))

@dataclasses.dataclass(frozen=True)
class JobDescriptor:
    id: str
    submit_site: str
    input_datasets: tuple = ()
    executable_mb: float = 0.0
    output_mb: float = 0.0
    compute_demand: float = 1.0
    sub_job_count: int = 1
    submit_time: float = 0.0
    min_power: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'input_datasets', tuple(self.input_datasets))
        _require(self.executable_mb >= 0, f'{self.id}.executable_mb', 'nonnegative', self.executable_mb)
        _require(self.output_mb >= 0, f'{self.id}.output_mb', 'nonnegative', self.output_mb)
        _require(self.compute_demand > 0, f'{self.id}.compute_demand', 'positive', self.compute_demand)
        _require(self.sub_job_count >= 1, f'{self.id}.sub_job_count', 'at least 1', self.sub_job_count)
        _require(self.submit_time >= 0, f'{self.id}.submit_time', 'nonnegative', self.submit_time)

@dataclasses.dataclass(frozen=True)
class WeightVector:
    '''
    The importance weights of the cost model. There is no w4; the numbering
    follows the published model, which skips it.
    '''
    w1: float = 1
    w2: float = 1
    w3: float = 1
    w5: float = 1
    w6: float = 1
    w7: float = 1
    w8: float = 1
    w9: float = 1
    w10: float = 1

    def __post_init__(self):
        for name in WEIGHT_NAMES:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value >= 0 and math.isfinite(value)):
                raise exceptions.InvalidWeight(name, value)

    def as_dict(self):
        return {name: getattr(self, name) for name in WEIGHT_NAMES}

    def scaled(self, factor):
        return WeightVector(**{name: value * factor for (name, value) in self.as_dict().items()})

def validate_weights(weights):
    '''
    Enforce the 1 to 20 range, with 0 allowed for "ignore this term".
    '''
    for (name, value) in weights.as_dict().items():
        if value != 0 and not (WEIGHT_MIN <= value <= WEIGHT_MAX):
            raise exceptions.InvalidWeight(name, value)
    return weights

@dataclasses.dataclass(frozen=True)
class Topology:
    '''
    A validated Grid: sites by id, directed links by (src, dst), datasets by id.
    Produced by validate_topology; treat as read-only.
    '''
    sites: dict
    links: dict
    datasets: dict

    @property
    def site_ids(self):
        return sorted(self.sites)

    def site(self, site_id):
        try:
            return self.sites[site_id]
        except KeyError:
            raise exceptions.UnknownSite(site_id)

    def dataset(self, dataset_id):
        try:
            return self.datasets[dataset_id]
        except KeyError:
            raise exceptions.UnknownDataset(dataset_id)

    def link(self, src, dst):
        if src == dst:
            return LinkMetrics.local(src)
        try:
            return self.links[(src, dst)]
        except KeyError:
            raise exceptions.MissingLink(src, dst)

    def input_size_mb(self, job):
        return sum(self.dataset(dataset_id).size_mb for dataset_id in job.input_datasets)

    def with_replica(self, dataset_id, site_id):
        '''
        Return a new Topology in which `dataset_id` also has a replica at
        `site_id`. The receiver is left untouched.
        '''
        dataset = self.dataset(dataset_id)
        self.site(site_id)
        if site_id in dataset.replicas:
            return self
        datasets = dict(self.datasets)
        datasets[dataset_id] = dataclasses.replace(dataset, replicas=dataset.replicas | {site_id})
        return dataclasses.replace(self, datasets=datasets)

def required_links(site_ids, datasets, jobs=()):
    '''
    Enumerate the ordered site pairs that a scheduling decision can touch.

    Every replica must reach every site. Once there is a job to place, the
    cost matrix prices every ordered pair of candidate sites, and transferred
    replicas can serve any site later, so the whole mesh is required.
    '''
    site_ids = sorted(site_ids)
    pairs = set()
    for dataset in datasets:
        for replica in dataset.replicas:
            pairs.update((replica, site) for site in site_ids)
    jobs = list(jobs)
    for job in jobs:
        pairs.update((job.submit_site, site) for site in site_ids)
        pairs.update((site, job.submit_site) for site in site_ids)
    if jobs:
        pairs.update((a, b) for a in site_ids for b in site_ids)
    return {(a, b) for (a, b) in pairs if a != b}

def validate_topology(sites, links, datasets, jobs=()):
    '''
    Check a Grid description and return a Topology.

    Raises DuplicateSiteId, UnknownSite (link endpoint), UnknownReplicaSite,
    UnknownDataset (job input), DuplicateLink, MissingLink for a required
    pair. Links with non-positive bandwidth were already refused by
    LinkMetrics.
    '''
    site_map = {}
    for site in sites:
        if site.id in site_map:
            raise exceptions.DuplicateSiteId(site.id)
        site_map[site.id] = site

    link_map = {}
    for link in links:
        for endpoint in (link.src, link.dst):
            if endpoint not in site_map:
                raise exceptions.UnknownSite(endpoint)
        if link.src == link.dst:
            # Intra-site cost is implicitly zero.
            continue
        if (link.src, link.dst) in link_map:
            raise exceptions.DuplicateLink(link.src, link.dst)
        link_map[(link.src, link.dst)] = link

    dataset_map = {}
    for dataset in datasets:
        for replica in sorted(dataset.replicas):
            if replica not in site_map:
                raise exceptions.UnknownReplicaSite(dataset.id, replica)
        dataset_map[dataset.id] = dataset

    # Datasets named as hosted by a site count as replicas there.
    for site in site_map.values():
        for dataset_id in sorted(site.hosted_datasets):
            if dataset_id not in dataset_map:
                raise exceptions.UnknownDataset(dataset_id)
            dataset = dataset_map[dataset_id]
            if site.id not in dataset.replicas:
                dataset_map[dataset_id] = dataclasses.replace(dataset, replicas=dataset.replicas | {site.id})

    jobs = list(jobs)
    for job in jobs:
        if job.submit_site not in site_map:
            raise exceptions.UnknownSite(job.submit_site)
        for dataset_id in job.input_datasets:
            if dataset_id not in dataset_map:
                raise exceptions.UnknownDataset(dataset_id)

    required = required_links(site_map, dataset_map.values(), jobs)
    for (src, dst) in sorted(required):
        if (src, dst) not in link_map:
            raise exceptions.MissingLink(src, dst)

    return Topology(
        sites={key: site_map[key] for key in sorted(site_map)},
        links={key: link_map[key] for key in sorted(link_map)},
        datasets={key: dataset_map[key] for key in sorted(dataset_map)},
    )

def revalidate(topology, jobs=()):
    return validate_topology(
        topology.sites.values(),
        topology.links.values(),
        topology.datasets.values(),
        jobs=jobs,
    )

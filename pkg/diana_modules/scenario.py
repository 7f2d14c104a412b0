'''
Scenario files: one YAML document holding the Grid, the weights, every
tunable and the workload. Any problem is reported as ScenarioInvalid with the
file path and the line of the offending node.

schema: 1
seed: 7
scheduler: diana
sites:
  - {id: cern, cpus: 32}
links:
  - {src: cern, dst: fzk, rtt_ms: 2, bandwidth_mbps: 10000}
datasets:
  - {id: ds000, size_gb: 2, replicas: [cern]}
workload:
  profile: {jobs_per_day: 86400, max_jobs: 100}
'''
import contextlib
import dataclasses

import yaml
from voussoirkit import pathclass

from . import common
from . import costengine
from . import exceptions
from . import gridmodel
from . import schedulers
from . import simulator
from . import telemetry
from . import workload

SCHEMA_VERSION = 1

TOP_KEYS = {
    'schema', 'name', 'description', 'seed', 'scheduler', 'shortlist_k', 'export_threshold',
    'weights', 'costs', 'telemetry', 'load', 'sites', 'links', 'datasets', 'synthetic_datasets',
    'workload',
}
SITE_KEYS = {'id', 'cpus', 'power_per_cpu', 'storage_gb', 'hosts', 'queued'}
LINK_KEYS = {'src', 'dst', 'rtt_ms', 'loss_rate', 'jitter_ms', 'bandwidth_mbps', 'symmetric'}
DATASET_KEYS = {'id', 'size_mb', 'size_gb', 'replicas'}
SYNTHETIC_KEYS = {'count', 'replicas', 'min_gb', 'max_gb', 'scale'}
COST_KEYS = {'mss_bytes', 'loss_floor', 'losses_override', 'nc_site'}
TELEMETRY_KEYS = {'epoch_seconds', 'window', 'noise'}
LOAD_KEYS = {'total_waiting', 'reported_load_jobs'}
WORKLOAD_KEYS = {'jobs', 'profile'}
JOB_KEYS = {
    'id', 'submit_site', 'inputs', 'executable_mb', 'output_mb', 'demand', 'sub_jobs',
    'submit_time', 'min_power',
}
PROFILE_KEYS = {
    'jobs_per_day', 'parallel_target', 'dataset_pool', 'inputs_per_job', 'demand',
    'bulk_fraction', 'sub_jobs_per_bundle', 'executable_mb', 'output_mb', 'submit_sites',
    'max_jobs', 'horizon_seconds',
}

REQUIRED = object()

class _Reader:
    '''
    Converts YAML nodes to Python values, keeping track of where they came
    from.
    '''
    def __init__(self, path):
        self.path = path
        self._constructor = yaml.SafeLoader('')

    def fail(self, node, message):
        line = 0 if node is None else node.start_mark.line + 1
        raise exceptions.ScenarioInvalid(path=self.path, line=line, message=message)

    @contextlib.contextmanager
    def located(self, node):
        '''
        Report any ValidationError raised inside the block at `node`.
        '''
        try:
            yield
        except exceptions.ScenarioInvalid:
            raise
        except exceptions.ValidationError as exc:
            self.fail(node, str(exc))

    def value(self, node):
        return self._constructor.construct_object(node, deep=True)

    def mapping(self, node, allowed, where):
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, f'{where} must be a mapping.')
        return _Mapping(self, node, allowed, where)

    def sequence(self, node, where):
        if not isinstance(node, yaml.SequenceNode):
            self.fail(node, f'{where} must be a list.')
        return node.value

class _Mapping:
    def __init__(self, reader, node, allowed, where):
        self.reader = reader
        self.node = node
        self.where = where
        self.items = {}
        for (key_node, value_node) in node.value:
            key = reader.value(key_node)
            if not isinstance(key, str):
                reader.fail(key_node, f'{where} keys must be strings, got {key!r}.')
            if key in self.items:
                reader.fail(key_node, f'Duplicate key "{key}" in {where}.')
            if allowed is not None and key not in allowed:
                reader.fail(key_node, f'Unknown key "{key}" in {where}. Allowed: {", ".join(sorted(allowed))}.')
            self.items[key] = value_node

    def __contains__(self, key):
        return key in self.items

    def node_for(self, key):
        return self.items.get(key, self.node)

    def raw(self, key, default=REQUIRED):
        if key not in self.items:
            if default is REQUIRED:
                self.reader.fail(self.node, f'{self.where} is missing required key "{key}".')
            return default
        return self.reader.value(self.items[key])

    def number(self, key, default=REQUIRED, kind=float):
        if key not in self.items and default is not REQUIRED:
            return default
        value = self.raw(key, default)
        if value is None and default is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.reader.fail(self.items[key], f'{self.where}.{key} must be a number, got {value!r}.')
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                self.reader.fail(self.items[key], f'{self.where}.{key} must be an integer, got {value!r}.')
            return int(value)
        return float(value)

    def boolean(self, key, default=REQUIRED):
        value = self.raw(key, default)
        if not isinstance(value, bool):
            self.reader.fail(self.items[key], f'{self.where}.{key} must be true or false, got {value!r}.')
        return value

    def string(self, key, default=REQUIRED):
        if key not in self.items and default is not REQUIRED:
            return default
        value = self.raw(key, default)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = str(value)
        if not isinstance(value, str) or not value:
            self.reader.fail(self.items[key], f'{self.where}.{key} must be a nonempty string, got {value!r}.')
        return value

    def strings(self, key, default=REQUIRED):
        if key not in self.items:
            return self.raw(key, default)
        node = self.items[key]
        values = self.reader.value(node)
        if isinstance(values, str):
            values = [values]
        if not isinstance(values, list) or not all(isinstance(v, (str, int)) for v in values):
            self.reader.fail(node, f'{self.where}.{key} must be a list of names.')
        return [str(v) for v in values]

    def pair(self, key, default=REQUIRED, kind=float):
        if key not in self.items:
            return self.raw(key, default)
        node = self.items[key]
        value = self.reader.value(node)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value, value]
        if (
            not isinstance(value, list) or len(value) != 2 or
            any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            self.reader.fail(node, f'{self.where}.{key} must be a number or [min, max].')
        return tuple(kind(v) for v in value)

    def child(self, key, allowed):
        if key not in self.items:
            return None
        return self.reader.mapping(self.items[key], allowed, f'{self.where}.{key}')

@dataclasses.dataclass(frozen=True)
class Scenario:
    path: str
    name: str
    topology: gridmodel.Topology
    jobs: tuple
    weights: gridmodel.WeightVector
    seed: int
    scheduler: str
    shortlist_k: int
    export_threshold: float
    costs: costengine.CostSettings
    telemetry: telemetry.TelemetrySettings
    queued: dict
    total_waiting: int = None
    reported_load_jobs: dict = None
    profile: workload.WorkloadProfile = None
    horizon_seconds: float = None

    def snapshot(self):
        '''
        The load the scenario declares, used when explaining a placement
        outside of a simulation.
        '''
        snapshot = costengine.GlobalLoadSnapshot.from_queues(
            self.topology.sites,
            self.queued,
            reported_load_jobs=self.reported_load_jobs,
        )
        if self.total_waiting is not None:
            snapshot = snapshot.with_total(self.total_waiting)
        return snapshot

    def oracle(self):
        return costengine.NetworkCostOracle(self.topology.links, self.weights, self.costs)

    def sim_settings(self, scheduler=None, trace=False):
        return simulator.SimSettings(
            scheduler=scheduler or self.scheduler,
            seed=self.seed,
            shortlist_k=self.shortlist_k,
            export_threshold=self.export_threshold,
            costs=self.costs,
            telemetry=self.telemetry,
            trace=trace,
        )

    def jobs_for(self, n_jobs):
        '''
        The first `n_jobs` jobs of the scenario's stream. Generated workloads
        are regenerated with the larger cap so any N is available.
        '''
        if n_jobs is None:
            return list(self.jobs)
        if self.profile is not None and len(self.jobs) < n_jobs:
            profile = dataclasses.replace(self.profile, max_jobs=n_jobs)
            jobs = workload.generate(profile, None, self.topology)
            gridmodel.revalidate(self.topology, jobs)
            return jobs[:n_jobs]
        return list(self.jobs[:n_jobs])

def _parse_weights(reader, section):
    if section is None:
        return gridmodel.WeightVector()
    values = {name: section.number(name) for name in section.items}
    try:
        return gridmodel.validate_weights(gridmodel.WeightVector(**values))
    except exceptions.InvalidWeight as exc:
        reader.fail(section.node_for(exc.given_args[0]), str(exc))

def _parse_sites(reader, root):
    sites = []
    hosts = {}
    queued = {}
    if 'sites' not in root:
        reader.fail(root.node, 'scenario is missing required key "sites".')
    if not reader.value(root.node_for('sites')):
        reader.fail(root.node_for('sites'), 'scenario needs at least one site.')
    for node in reader.sequence(root.node_for('sites'), 'sites'):
        item = reader.mapping(node, SITE_KEYS, 'site')
        site_id = item.string('id')
        if any(site.id == site_id for site in sites):
            reader.fail(item.node_for('id'), str(exceptions.DuplicateSiteId(site_id)))
        with reader.located(node):
            site = gridmodel.SiteDescriptor(
                id=site_id,
                cpu_count=item.number('cpus', kind=int),
                power_per_cpu=item.number('power_per_cpu', 1.0),
                storage_capacity=item.number('storage_gb', 0.0) * common.GB_TO_MB,
            )
        sites.append(site)
        hosts[site_id] = (item, item.strings('hosts', []))
        queued[site_id] = item.number('queued', 0, kind=int)
        if queued[site_id] < 0:
            reader.fail(item.node_for('queued'), f'{site_id}.queued must be nonnegative.')
    return (sites, hosts, queued)

def _parse_links(reader, root, site_ids):
    '''
    A symmetric entry is mirrored only when its reverse is not listed on its
    own, so explicit directional metrics always win.
    '''
    listed = {}
    mirrored = []
    if 'links' not in root:
        return []
    for node in reader.sequence(root.node_for('links'), 'links'):
        item = reader.mapping(node, LINK_KEYS, 'link')
        src = item.string('src')
        dst = item.string('dst')
        for (key, endpoint) in (('src', src), ('dst', dst)):
            if endpoint not in site_ids:
                reader.fail(item.node_for(key), str(exceptions.UnknownSite(endpoint)))
        fields = dict(
            rtt_ms=item.number('rtt_ms', 0.0),
            loss_rate=item.number('loss_rate', 0.0),
            jitter_ms=item.number('jitter_ms', 0.0),
            bandwidth_mbps=item.number('bandwidth_mbps'),
        )
        symmetric = item.boolean('symmetric', True)
        if (src, dst) in listed:
            reader.fail(node, str(exceptions.DuplicateLink(src, dst)))
        with reader.located(node):
            listed[(src, dst)] = gridmodel.LinkMetrics(src=src, dst=dst, **fields)
            if symmetric:
                mirrored.append(gridmodel.LinkMetrics(src=dst, dst=src, **fields))
    links = list(listed.values())
    seen = set(listed)
    for link in mirrored:
        if (link.src, link.dst) not in seen:
            seen.add((link.src, link.dst))
            links.append(link)
    return links

def _parse_datasets(reader, root, site_ids, seed):
    datasets = []
    if 'datasets' in root:
        for node in reader.sequence(root.node_for('datasets'), 'datasets'):
            item = reader.mapping(node, DATASET_KEYS, 'dataset')
            dataset_id = item.string('id')
            if 'size_mb' in item:
                size_mb = item.number('size_mb')
            else:
                size_mb = item.number('size_gb') * common.GB_TO_MB
            replicas = item.strings('replicas', [])
            for replica in replicas:
                if replica not in site_ids:
                    reader.fail(item.node_for('replicas'), str(exceptions.UnknownReplicaSite(dataset_id, replica)))
            datasets.append((item, dataset_id, size_mb, replicas))

    synthetic = root.child('synthetic_datasets', SYNTHETIC_KEYS)
    generated = []
    if synthetic is not None:
        with reader.located(synthetic.node):
            generated = workload.synthesize_datasets(
                synthetic.number('count', kind=int),
                site_ids,
                seed=seed,
                replicas=synthetic.number('replicas', 1, kind=int),
                min_gb=synthetic.number('min_gb', workload.DATASET_MIN_GB),
                max_gb=synthetic.number('max_gb', workload.DATASET_MAX_GB),
                scale=synthetic.number('scale', workload.DATASET_SCALE),
            )
    return (datasets, generated)

def _parse_costs(reader, root, site_ids):
    section = root.child('costs', COST_KEYS)
    if section is None:
        return costengine.CostSettings()
    nc_site = {}
    if 'nc_site' in section:
        nc_section = reader.mapping(section.items['nc_site'], None, 'costs.nc_site')
        for site_id in nc_section.items:
            if site_id not in site_ids:
                reader.fail(nc_section.node_for(site_id), str(exceptions.UnknownSite(site_id)))
            nc_site[site_id] = nc_section.number(site_id)
    with reader.located(section.node):
        return costengine.CostSettings(
            mss_bytes=section.number('mss_bytes', common.DEFAULT_MSS_BYTES, kind=int),
            loss_floor=section.number('loss_floor', common.DEFAULT_LOSS_FLOOR),
            losses_override=section.number('losses_override', None),
            nc_site=nc_site,
        )

def _parse_telemetry(reader, root):
    section = root.child('telemetry', TELEMETRY_KEYS)
    if section is None:
        return telemetry.TelemetrySettings()
    with reader.located(section.node):
        return telemetry.TelemetrySettings(
            epoch_seconds=section.number('epoch_seconds', 300.0),
            window=section.number('window', 12, kind=int),
            noise=section.number('noise', 0.0),
        )

def _parse_jobs(reader, section, topology):
    jobs = []
    for node in reader.sequence(section.items['jobs'], 'workload.jobs'):
        item = reader.mapping(node, JOB_KEYS, 'job')
        job_id = item.string('id', 'job%05d' % len(jobs))
        submit_site = item.string('submit_site')
        if submit_site not in topology.sites:
            reader.fail(item.node_for('submit_site'), str(exceptions.UnknownSite(submit_site)))
        inputs = item.strings('inputs', [])
        for dataset_id in inputs:
            if dataset_id not in topology.datasets:
                reader.fail(item.node_for('inputs'), str(exceptions.UnknownDataset(dataset_id)))
        with reader.located(node):
            jobs.append(gridmodel.JobDescriptor(
                id=job_id,
                submit_site=submit_site,
                input_datasets=inputs,
                executable_mb=item.number('executable_mb', 0.0),
                output_mb=item.number('output_mb', 0.0),
                compute_demand=item.number('demand', 1.0),
                sub_job_count=item.number('sub_jobs', 1, kind=int),
                submit_time=item.number('submit_time', 0.0),
                min_power=item.number('min_power', 0.0),
            ))
    if len({job.id for job in jobs}) != len(jobs):
        reader.fail(section.items['jobs'], 'Job ids must be unique.')
    return jobs

def _parse_profile(reader, section, topology, seed):
    profile_section = reader.mapping(section.items['profile'], PROFILE_KEYS, 'workload.profile')
    defaults = workload.WorkloadProfile()
    def names(key):
        values = profile_section.strings(key, None)
        return None if values is None else tuple(values)

    for key in ('dataset_pool', 'submit_sites'):
        for name in profile_section.strings(key, []):
            known = topology.datasets if key == 'dataset_pool' else topology.sites
            if name not in known:
                reader.fail(profile_section.node_for(key), f'{key} names unknown "{name}".')
    with reader.located(profile_section.node):
        profile = workload.WorkloadProfile(
            jobs_per_day=profile_section.number('jobs_per_day', defaults.jobs_per_day),
            parallel_target=profile_section.number('parallel_target', 0, kind=int),
            dataset_pool=names('dataset_pool'),
            inputs_per_job=profile_section.pair('inputs_per_job', defaults.inputs_per_job, kind=int),
            demand_distribution=profile_section.pair('demand', defaults.demand_distribution),
            bulk_fraction=profile_section.number('bulk_fraction', defaults.bulk_fraction),
            sub_jobs_per_bundle=profile_section.pair('sub_jobs_per_bundle', defaults.sub_jobs_per_bundle, kind=int),
            executable_mb=profile_section.pair('executable_mb', defaults.executable_mb),
            output_mb=profile_section.pair('output_mb', defaults.output_mb),
            submit_sites=names('submit_sites'),
            seed=seed,
            max_jobs=profile_section.number('max_jobs', None, kind=int),
        )
    horizon = profile_section.number('horizon_seconds', None)
    if horizon is None and profile.max_jobs is None:
        horizon = workload.SECONDS_PER_DAY
    with reader.located(profile_section.node):
        jobs = workload.generate(profile, horizon, topology)
    return (profile, horizon, jobs)

def parse_scenario(text, path='<scenario>', seed=None, scheduler=None):
    '''
    Parse scenario text. `seed` and `scheduler` override the file.
    '''
    reader = _Reader(path)
    try:
        document = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, 'problem_mark', None)
        line = 0 if mark is None else mark.line + 1
        raise exceptions.ScenarioInvalid(path=path, line=line, message=f'Not valid YAML: {getattr(exc, "problem", exc)}.')
    if document is None:
        raise exceptions.ScenarioInvalid(path=path, line=0, message='The file is empty.')
    root = reader.mapping(document, TOP_KEYS, 'scenario')

    schema = root.number('schema', kind=int)
    if schema != SCHEMA_VERSION:
        reader.fail(root.node_for('schema'), f'Unsupported schema {schema}, expected {SCHEMA_VERSION}.')

    seed = common.resolve_seed(flag_seed=seed, file_seed=root.number('seed', None, kind=int))
    scheduler = scheduler or root.string('scheduler', 'diana')
    if scheduler not in schedulers.POLICIES:
        reader.fail(root.node_for('scheduler'), str(exceptions.UnknownScheduler(scheduler, ', '.join(schedulers.POLICIES))))
    shortlist_k = root.number('shortlist_k', common.DEFAULT_SHORTLIST_K, kind=int)
    if shortlist_k < 1:
        reader.fail(root.node_for('shortlist_k'), 'shortlist_k must be at least 1.')
    export_threshold = root.number('export_threshold', simulator.DEFAULT_EXPORT_THRESHOLD)
    if export_threshold < 0:
        reader.fail(root.node_for('export_threshold'), 'export_threshold must be nonnegative.')

    weights = _parse_weights(reader, root.child('weights', set(gridmodel.WEIGHT_NAMES)))
    (sites, hosts, queued) = _parse_sites(reader, root)
    site_ids = [site.id for site in sites]
    links = _parse_links(reader, root, site_ids)
    (declared, generated) = _parse_datasets(reader, root, site_ids, seed)

    dataset_ids = {dataset_id for (item, dataset_id, size_mb, replicas) in declared}
    dataset_ids.update(dataset.id for dataset in generated)
    hosted = {}
    for (site_id, (item, names)) in hosts.items():
        for name in names:
            if name not in dataset_ids:
                reader.fail(item.node_for('hosts'), str(exceptions.UnknownDataset(name)))
            hosted.setdefault(name, set()).add(site_id)
    datasets = list(generated)
    for (item, dataset_id, size_mb, replicas) in declared:
        replicas = set(replicas) | hosted.get(dataset_id, set())
        with reader.located(item.node):
            datasets.append(gridmodel.DatasetDescriptor(dataset_id, size_mb, replicas))
    sites = [
        dataclasses.replace(site, hosted_datasets=frozenset(hosts[site.id][1]))
        for site in sites
    ]

    with reader.located(root.node_for('links')):
        topology = gridmodel.validate_topology(sites, links, datasets)

    costs = _parse_costs(reader, root, site_ids)
    telemetry_settings = _parse_telemetry(reader, root)

    load = root.child('load', LOAD_KEYS)
    total_waiting = None
    reported_load_jobs = None
    if load is not None:
        total_waiting = load.number('total_waiting', None, kind=int)
        if 'reported_load_jobs' in load:
            reported = reader.mapping(load.items['reported_load_jobs'], set(site_ids), 'load.reported_load_jobs')
            reported_load_jobs = {site_id: reported.number(site_id) for site_id in reported.items}

    profile = None
    horizon = None
    jobs = []
    section = root.child('workload', WORKLOAD_KEYS)
    if section is not None:
        if ('jobs' in section) == ('profile' in section):
            reader.fail(section.node, 'workload needs exactly one of "jobs" or "profile".')
        if 'jobs' in section:
            jobs = _parse_jobs(reader, section, topology)
        else:
            (profile, horizon, jobs) = _parse_profile(reader, section, topology, seed)
    with reader.located(root.node_for('links')):
        topology = gridmodel.revalidate(topology, jobs)

    if path == '<scenario>':
        default_name = 'scenario'
    else:
        default_name = pathclass.Path(path).replace_extension('').basename
    return Scenario(
        path=path,
        name=root.string('name', default_name),
        topology=topology,
        jobs=tuple(jobs),
        weights=weights,
        seed=seed,
        scheduler=scheduler,
        shortlist_k=shortlist_k,
        export_threshold=export_threshold,
        costs=costs,
        telemetry=telemetry_settings,
        queued=queued,
        total_waiting=total_waiting,
        reported_load_jobs=reported_load_jobs,
        profile=profile,
        horizon_seconds=horizon,
    )

def load_scenario(path, seed=None, scheduler=None):
    path = pathclass.Path(path)
    if not path.is_file:
        raise exceptions.ScenarioInvalid(path=path.absolute_path, line=0, message='No such scenario file.')
    with path.open('r', encoding='utf-8') as handle:
        text = handle.read()
    common.log.debug('Loading scenario %s.', path.absolute_path)
    return parse_scenario(text, path=path.absolute_path, seed=seed, scheduler=scheduler)

'''
Discrete-event simulator of a Grid: FCFS non-preemptive local queues, data
and executable staging, time-varying telemetry and job export.

One Simulation is strictly single threaded. Events are processed in
(time, seq) order and seq is assigned when an event is pushed, so a run is a
pure function of its inputs and seed.
'''
import collections
import dataclasses
import heapq

import numpy

from . import common
from . import costengine
from . import exceptions
from . import matchmaker
from . import schedulers
from . import telemetry

JOB_SUBMITTED = 'JobSubmitted'
TRANSFER_COMPLETED = 'TransferCompleted'
JOB_STARTED = 'JobStarted'
JOB_FINISHED = 'JobFinished'
TELEMETRY_EPOCH = 'TelemetryEpoch'
EXPORT_EVALUATED = 'ExportEvaluated'

DEFAULT_EXPORT_THRESHOLD = 1.0

@dataclasses.dataclass(frozen=True)
class SimEvent:
    time: float
    seq: int
    kind: str
    job: str = None
    site: str = None
    dataset: str = None
    # Job placement attempt the event belongs to; stale events are ignored.
    attempt: int = 0
    sub_job: int = 0
    slot: int = 0

    @property
    def detail(self):
        if self.kind == TRANSFER_COMPLETED:
            return self.dataset or 'executable'
        if self.kind in (JOB_STARTED, JOB_FINISHED):
            return f'sub={self.sub_job} slot={self.slot}'
        return ''

@dataclasses.dataclass(frozen=True)
class JobRecord:
    '''
    Timing of one job or sub-job bundle. For bundles, start_time is the first
    sub-job start and finish_time the last sub-job finish.
    slots: (site, slot, start, finish) per sub-job.
    '''
    job: str
    scheduler: str
    submit_site: str
    placement: matchmaker.Placement
    submit_time: float
    transfer_done_time: float
    start_time: float
    finish_time: float
    output_time: float
    exported_from: str = None
    slots: tuple = ()

    @property
    def exec_site(self):
        return self.placement.exec_site

    @property
    def queue_time(self):
        return self.start_time - self.submit_time

    @property
    def execution_time(self):
        return self.finish_time - self.start_time

    @property
    def completion_time(self):
        return self.output_time - self.submit_time

    @property
    def exported(self):
        return self.exported_from is not None

@dataclasses.dataclass(frozen=True)
class SimSummary:
    scheduler: str
    n_jobs: int
    mean_queue: float
    median_queue: float
    mean_exec: float
    median_exec: float
    mean_completion: float
    median_completion: float
    exported: int
    makespan: float
    peak_running: dict

@dataclasses.dataclass(frozen=True)
class SimSettings:
    scheduler: str = 'diana'
    seed: int = 0
    shortlist_k: int = common.DEFAULT_SHORTLIST_K
    # Export when remote estimate < local estimate * threshold. 0 disables.
    export_threshold: float = DEFAULT_EXPORT_THRESHOLD
    costs: costengine.CostSettings = dataclasses.field(default_factory=costengine.CostSettings)
    telemetry: 'telemetry.TelemetrySettings' = dataclasses.field(default_factory=telemetry.TelemetrySettings)
    trace: bool = False

    def __post_init__(self):
        schedulers.get_policy(self.scheduler)
        if self.export_threshold < 0:
            raise exceptions.InvalidValue('export_threshold', 'nonnegative', self.export_threshold)
        if self.shortlist_k < 1:
            raise exceptions.InvalidValue('shortlist_k', 'at least 1', self.shortlist_k)

@dataclasses.dataclass(frozen=True)
class SimResult:
    records: tuple
    summary: SimSummary
    trace: tuple = ()

class _JobState:
    def __init__(self, job):
        self.job = job
        self.placement = None
        self.site = None
        self.attempt = 0
        self.pending = 0
        self.ready_at = None
        self.transfer_done_time = None
        self.exported_from = None
        self.started = 0
        self.finished = 0
        self.start_time = None
        self.finish_time = None
        self.output_time = None
        self.slots = []

    @property
    def ready(self):
        return self.pending == 0 and self.transfer_done_time is not None

class _SiteState:
    def __init__(self, site):
        self.site = site
        self.queue = collections.deque()
        self.free_slots = list(range(site.cpu_count))
        # slot -> (job id, sub-job index, finish time)
        self.running = {}
        self.peak = 0

class Simulation:
    def __init__(self, topology, jobs, weights, settings=SimSettings()):
        '''
        topology: a gridmodel.Topology validated together with `jobs`.
        '''
        self.topology = topology
        self.jobs = sorted(jobs, key=lambda job: (job.submit_time, job.id))
        self.weights = weights
        self.settings = settings
        self.policy = schedulers.get_policy(settings.scheduler)

        self.now = 0.0
        self._seq = 0
        self._events = []
        self.trace = []
        self.states = {job.id: _JobState(job) for job in self.jobs}
        if len(self.states) != len(self.jobs):
            raise exceptions.InvalidValue('job ids', 'unique', [job.id for job in self.jobs])
        self.sites = {site_id: _SiteState(site) for (site_id, site) in topology.sites.items()}
        self.finished_jobs = 0
        self.in_flight = {}
        self.waiters = collections.defaultdict(list)

        self.feed = telemetry.TelemetryFeed(topology.links, settings.telemetry, seed=settings.seed)
        self.rng = numpy.random.default_rng(settings.seed)
        self.cache = matchmaker.MatrixCache()
        self._refresh_oracles()

    def __repr__(self):
        return f'Simulation({self.settings.scheduler}, jobs={len(self.jobs)}, t={self.now})'

    # EVENT QUEUE ##################################################################################

    def push(self, time, kind, **kwargs):
        if time < self.now:
            raise exceptions.InvalidValue('event time', f'at least {self.now}', time)
        event = SimEvent(time=time, seq=self._seq, kind=kind, **kwargs)
        self._seq += 1
        heapq.heappush(self._events, (event.time, event.seq, event))
        return event

    def _refresh_oracles(self):
        # The matchmaker believes the window average; transfers get the latest observation.
        self.view = costengine.NetworkCostOracle(self.feed.historical_average(), self.weights, self.settings.costs)
        self.actual = costengine.NetworkCostOracle(self.feed.latest(), self.weights, self.settings.costs)

    # STATE QUERIES ################################################################################

    def snapshot(self):
        queues = {site_id: len(state.queue) for (site_id, state) in self.sites.items()}
        return costengine.GlobalLoadSnapshot.from_queues(self.topology.sites, queues)

    def context(self):
        return schedulers.MatchContext(
            topology=self.topology,
            snapshot=self.snapshot(),
            nc=self.view,
            w=self.weights,
            k=self.settings.shortlist_k,
            rng=self.rng,
            now=self.now,
            epoch=self.feed.epoch,
            cache=self.cache,
        )

    def run_seconds(self, job, site_id):
        return job.compute_demand / self.topology.sites[site_id].power_per_cpu

    def in_flight_jobs(self):
        return len(self.jobs) - self.finished_jobs

    # TRANSFERS ####################################################################################

    def start_transfer(self, dataset_id, src, dst, t):
        '''
        Begin moving `dataset_id` from `src` to `dst` at time `t` and return
        the TransferCompleted event.
        '''
        size_mb = self.topology.dataset(dataset_id).size_mb
        seconds = self.actual.transfer_seconds(size_mb, src, dst)
        event = self.push(t + seconds, TRANSFER_COMPLETED, dataset=dataset_id, site=dst)
        self.in_flight[(dataset_id, dst)] = event.time
        common.log.debug('Transfer %s %s -> %s takes %s.', dataset_id, src, dst, common.human_seconds(seconds))
        return event

    def _stage(self, state):
        '''
        Start or join every transfer the job needs at its placement site.
        '''
        site_id = state.site
        job = state.job
        state.pending = 0
        ready_at = self.now
        for dataset_id in job.input_datasets:
            if site_id in self.topology.dataset(dataset_id).replicas:
                continue
            key = (dataset_id, site_id)
            if key not in self.in_flight:
                replica_site = state.placement.chosen_replicas[dataset_id]
                self.start_transfer(dataset_id, replica_site, site_id, self.now)
            self.waiters[key].append((job.id, state.attempt))
            state.pending += 1
            ready_at = max(ready_at, self.in_flight[key])
        if job.executable_mb > 0 and job.submit_site != site_id:
            seconds = self.actual.transfer_seconds(job.executable_mb, job.submit_site, site_id)
            event = self.push(self.now + seconds, TRANSFER_COMPLETED, job=job.id, site=site_id, attempt=state.attempt)
            state.pending += 1
            ready_at = max(ready_at, event.time)
        state.ready_at = ready_at
        if state.pending == 0:
            state.transfer_done_time = self.now

    def _transfer_arrived(self, state, attempt):
        if state.attempt != attempt:
            return
        state.pending -= 1
        if state.pending == 0:
            state.transfer_done_time = self.now

    # LOCAL QUEUES #################################################################################

    def enqueue_local(self, site_id, job):
        site_state = self.sites[site_id]
        for sub_job in range(job.sub_job_count):
            site_state.queue.append((job.id, sub_job))
        self.dispatch_next(site_id)

    def dispatch_next(self, site_id):
        '''
        Start queued sub-jobs in FCFS order while CPUs are free. The head of
        the queue blocks everyone behind it until its data has arrived.
        '''
        site_state = self.sites[site_id]
        while site_state.free_slots and site_state.queue:
            (job_id, sub_job) = site_state.queue[0]
            state = self.states[job_id]
            if not state.ready:
                break
            site_state.queue.popleft()
            slot = heapq.heappop(site_state.free_slots)
            finish = self.now + self.run_seconds(state.job, site_id)
            site_state.running[slot] = (job_id, sub_job, finish)
            site_state.peak = max(site_state.peak, len(site_state.running))
            if state.started == 0:
                state.start_time = self.now
            state.started += 1
            state.slots.append((site_id, slot, self.now, finish))
            self.push(self.now, JOB_STARTED, job=job_id, site=site_id, sub_job=sub_job, slot=slot)

    # EXPORT #######################################################################################

    def _cpu_free_times(self, site_id):
        site_state = self.sites[site_id]
        times = [finish for (job_id, sub_job, finish) in site_state.running.values()]
        times.extend([self.now] * len(site_state.free_slots))
        heapq.heapify(times)
        return times

    def _estimate_remote(self, state, placement):
        '''
        Seconds from now until the job would finish at the placement's site:
        staging, then waiting behind that site's queue, then running.
        '''
        job = state.job
        site_id = placement.exec_site
        ready = self.now
        for dataset_id in job.input_datasets:
            if site_id in self.topology.dataset(dataset_id).replicas:
                continue
            key = (dataset_id, site_id)
            if key in self.in_flight:
                ready = max(ready, self.in_flight[key])
                continue
            size_mb = self.topology.dataset(dataset_id).size_mb
            src = placement.chosen_replicas[dataset_id]
            ready = max(ready, self.now + self.actual.transfer_seconds(size_mb, src, site_id))
        if job.executable_mb > 0 and job.submit_site != site_id:
            ready = max(ready, self.now + self.actual.transfer_seconds(job.executable_mb, job.submit_site, site_id))

        free = self._cpu_free_times(site_id)
        for (job_id, sub_job) in self.sites[site_id].queue:
            other = self.states[job_id]
            start = max(heapq.heappop(free), other.ready_at or self.now)
            heapq.heappush(free, start + self.run_seconds(other.job, site_id))
        finish = self.now
        run = self.run_seconds(job, site_id)
        for sub_job in range(job.sub_job_count):
            start = max(heapq.heappop(free), ready)
            heapq.heappush(free, start + run)
            finish = max(finish, start + run)
        return finish - self.now

    def _exportable(self, site_id):
        '''
        Jobs whose sub-jobs are all still queued at this site, in queue order.
        '''
        seen = []
        for (job_id, sub_job) in self.sites[site_id].queue:
            state = self.states[job_id]
            if state.started == 0 and job_id not in seen:
                seen.append(job_id)
        return seen

    def maybe_export(self, site_id, t):
        '''
        Move queued jobs away from `site_id` when the best remote site, as
        chosen by the DIANA matchmaker without this site, is estimated to
        finish them sooner than staying would.
        '''
        threshold = self.settings.export_threshold
        site_state = self.sites[site_id]
        if threshold == 0 or not site_state.queue or len(self.sites) < 2:
            return []

        exported = []
        # Replay the local queue against the CPU free times; exported jobs
        # leave the replay so later jobs see the room they free.
        free = self._cpu_free_times(site_id)
        for (job_id, sub_job) in list(site_state.queue):
            state = self.states[job_id]
            if state.started == 0 and sub_job == 0:
                local_finish = self._local_finish(state, site_id, list(free))
                placement = self._export_candidate(state, site_id)
                if placement is not None:
                    remote = self._estimate_remote(state, placement)
                    local = local_finish - t
                    if remote < local * threshold:
                        self._export(state, placement)
                        exported.append(job_id)
                        continue
            if job_id in exported:
                continue
            start = max(heapq.heappop(free), state.ready_at or t)
            heapq.heappush(free, start + self.run_seconds(state.job, site_id))
        if exported:
            common.log.debug('Exported %d jobs from %s at t=%s.', len(exported), site_id, t)
        return exported

    def _local_finish(self, state, site_id, free):
        heapq.heapify(free)
        finish = self.now
        run = self.run_seconds(state.job, site_id)
        for sub_job in range(state.job.sub_job_count):
            start = max(heapq.heappop(free), state.ready_at or self.now)
            heapq.heappush(free, start + run)
            finish = max(finish, start + run)
        return finish

    def _export_candidate(self, state, site_id):
        context = self.context()
        try:
            return schedulers.place_diana(state.job, context, exclude=(site_id,))
        except exceptions.NoCandidateSite:
            return None

    def _export(self, state, placement):
        old_site = state.site
        site_state = self.sites[old_site]
        site_state.queue = collections.deque(
            entry for entry in site_state.queue if entry[0] != state.job.id
        )
        for key in list(self.waiters):
            self.waiters[key] = [waiter for waiter in self.waiters[key] if waiter[0] != state.job.id]
        if state.exported_from is None:
            state.exported_from = old_site
        self._place(state, placement)
        # The old head may have been the one blocking.
        self.dispatch_next(old_site)

    # PLACEMENT ####################################################################################

    def _place(self, state, placement):
        state.attempt += 1
        state.placement = placement
        state.site = placement.exec_site
        state.transfer_done_time = None
        self._stage(state)
        self.enqueue_local(placement.exec_site, state.job)

    # EVENT HANDLERS ###############################################################################

    def _on_submitted(self, event):
        state = self.states[event.job]
        placement = self.policy(state.job, self.context())
        self._place(state, placement)

    def _on_transfer(self, event):
        if event.dataset is None:
            self._transfer_arrived(self.states[event.job], event.attempt)
            self.dispatch_next(event.site)
            return
        key = (event.dataset, event.site)
        self.in_flight.pop(key, None)
        self.topology = self.topology.with_replica(event.dataset, event.site)
        for (job_id, attempt) in self.waiters.pop(key, []):
            self._transfer_arrived(self.states[job_id], attempt)
        self.dispatch_next(event.site)

    def _on_started(self, event):
        (job_id, sub_job, finish) = self.sites[event.site].running[event.slot]
        self.push(finish, JOB_FINISHED, job=event.job, site=event.site, sub_job=event.sub_job, slot=event.slot)

    def _on_finished(self, event):
        site_state = self.sites[event.site]
        del site_state.running[event.slot]
        heapq.heappush(site_state.free_slots, event.slot)
        state = self.states[event.job]
        state.finished += 1
        if state.finished == state.job.sub_job_count:
            state.finish_time = self.now
            output = self.actual.transfer_seconds(state.job.output_mb, event.site, state.job.submit_site)
            state.output_time = self.now + output
            self.finished_jobs += 1
        self.dispatch_next(event.site)

    def _on_epoch(self, event):
        self.feed.advance(self.now)
        self._refresh_oracles()
        if self.settings.export_threshold > 0:
            self.push(self.now, EXPORT_EVALUATED)
        if self.in_flight_jobs() > 0:
            self.push(self.now + self.settings.telemetry.epoch_seconds, TELEMETRY_EPOCH)

    def _on_export(self, event):
        for site_id in sorted(self.sites):
            self.maybe_export(site_id, self.now)

    HANDLERS = {
        JOB_SUBMITTED: _on_submitted,
        TRANSFER_COMPLETED: _on_transfer,
        JOB_STARTED: _on_started,
        JOB_FINISHED: _on_finished,
        TELEMETRY_EPOCH: _on_epoch,
        EXPORT_EVALUATED: _on_export,
    }

    # MAIN LOOP ####################################################################################

    def _stalled(self):
        if self.in_flight_jobs() == 0:
            return False
        if any(state.running for state in self.sites.values()):
            return False
        return all(event.kind in (TELEMETRY_EPOCH, EXPORT_EVALUATED) for (_, _, event) in self._events)

    def run(self):
        for job in self.jobs:
            self.push(job.submit_time, JOB_SUBMITTED, job=job.id, site=job.submit_site)
        if self.jobs:
            self.push(self.settings.telemetry.epoch_seconds, TELEMETRY_EPOCH)

        while self._events:
            (time, seq, event) = heapq.heappop(self._events)
            self.now = time
            if self.settings.trace:
                self.trace.append(event)
            self.HANDLERS[event.kind](self, event)
            if self._stalled():
                raise exceptions.Deadlock(self.now, self.in_flight_jobs())

        if self.in_flight_jobs() > 0:
            raise exceptions.Deadlock(self.now, self.in_flight_jobs())
        records = self.records()
        return SimResult(
            records=records,
            summary=summarize(records, self.settings.scheduler, self.peak_running()),
            trace=tuple(self.trace),
        )

    def peak_running(self):
        return {site_id: state.peak for (site_id, state) in self.sites.items()}

    def records(self):
        records = []
        for job in self.jobs:
            state = self.states[job.id]
            records.append(JobRecord(
                job=job.id,
                scheduler=self.settings.scheduler,
                submit_site=job.submit_site,
                placement=state.placement,
                submit_time=job.submit_time,
                transfer_done_time=state.transfer_done_time,
                start_time=state.start_time,
                finish_time=state.finish_time,
                output_time=state.output_time,
                exported_from=state.exported_from,
                slots=tuple(state.slots),
            ))
        return tuple(records)

def summarize(records, scheduler, peak_running=None):
    if not records:
        return SimSummary(scheduler, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0, dict(peak_running or {}))
    queue = numpy.array([record.queue_time for record in records])
    execution = numpy.array([record.execution_time for record in records])
    completion = numpy.array([record.completion_time for record in records])
    first_submit = min(record.submit_time for record in records)
    makespan = max(record.output_time for record in records) - first_submit
    return SimSummary(
        scheduler=scheduler,
        n_jobs=len(records),
        mean_queue=float(queue.mean()),
        median_queue=float(numpy.median(queue)),
        mean_exec=float(execution.mean()),
        median_exec=float(numpy.median(execution)),
        mean_completion=float(completion.mean()),
        median_completion=float(numpy.median(completion)),
        exported=sum(record.exported for record in records),
        makespan=float(makespan),
        peak_running=dict(peak_running or {}),
    )

def run(topology, jobs, weights, settings=SimSettings()):
    return Simulation(topology, jobs, weights, settings).run()

'''
Synthetic link telemetry for the simulator.

Every directed link has a base LinkMetrics and an optional bounded uniform
noise. Each telemetry epoch draws a new observation per link and appends it
to a fixed-length history; the matchmaker reads the history average while
transfers run at the latest observation.
'''
import collections
import dataclasses

import numpy

from . import exceptions
from . import gridmodel

@dataclasses.dataclass(frozen=True)
class TelemetrySettings:
    epoch_seconds: float = 300.0
    window: int = 12
    # Relative amplitude of uniform noise on every metric. 0 keeps links static.
    noise: float = 0.0

    def __post_init__(self):
        if not self.epoch_seconds > 0:
            raise exceptions.InvalidValue('telemetry.epoch_seconds', 'positive', self.epoch_seconds)
        if not self.window >= 1:
            raise exceptions.InvalidValue('telemetry.window', 'at least 1', self.window)
        if not 0 <= self.noise < 1:
            raise exceptions.InvalidValue('telemetry.noise', 'in [0, 1)', self.noise)

class TelemetryFeed:
    def __init__(self, links, settings=TelemetrySettings(), seed=0):
        '''
        links: mapping of (src, dst) to the base LinkMetrics of that link.
        '''
        self.settings = settings
        self.base = dict(sorted(links.items()))
        self.epoch = 0
        self.now = 0.0
        seeds = numpy.random.SeedSequence(seed).spawn(max(len(self.base), 1))
        self._rngs = {
            pair: numpy.random.default_rng(child)
            for (pair, child) in zip(self.base, seeds)
        }
        self.history = {
            pair: collections.deque([metrics], maxlen=settings.window)
            for (pair, metrics) in self.base.items()
        }

    def __repr__(self):
        return f'TelemetryFeed(links={len(self.base)}, epoch={self.epoch})'

    @property
    def static(self):
        return self.settings.noise == 0

    def _observe(self, pair, now):
        base = self.base[pair]
        if self.static:
            return dataclasses.replace(base, observed_at=now)
        factors = 1 + self._rngs[pair].uniform(-self.settings.noise, self.settings.noise, size=4)
        return gridmodel.LinkMetrics(
            src=base.src,
            dst=base.dst,
            rtt_ms=base.rtt_ms * factors[0],
            loss_rate=min(1.0, base.loss_rate * factors[1]),
            jitter_ms=base.jitter_ms * factors[2],
            bandwidth_mbps=base.bandwidth_mbps * factors[3],
            observed_at=now,
        )

    def advance(self, now):
        '''
        Record one observation per link at time `now` and move to the next
        epoch.
        '''
        self.epoch += 1
        self.now = now
        for pair in self.base:
            self.history[pair].append(self._observe(pair, now))

    def latest(self):
        return {pair: history[-1] for (pair, history) in self.history.items()}

    def historical_average(self):
        '''
        Mean of every metric over the retained window. Static links return
        their base metrics untouched so that costs stay exact.
        '''
        if self.static:
            return dict(self.base)
        averaged = {}
        for (pair, history) in self.history.items():
            values = numpy.array([
                (m.rtt_ms, m.loss_rate, m.jitter_ms, m.bandwidth_mbps)
                for m in history
            ])
            (rtt, loss, jitter, bandwidth) = values.mean(axis=0)
            averaged[pair] = gridmodel.LinkMetrics(
                src=pair[0],
                dst=pair[1],
                rtt_ms=float(rtt),
                loss_rate=min(1.0, float(loss)),
                jitter_ms=float(jitter),
                bandwidth_mbps=float(bandwidth),
                observed_at=history[-1].observed_at,
            )
        return averaged

"""Exact continuous-time kindness dynamics on a graph.

Every oriented edge ``x -> y`` carries a rate-one exponential clock.  When it
rings, ``x`` sends a kind interaction with probability ``1/2 + xi(x)/2`` and an
unkind one otherwise; kind moves ``xi(y)`` a fraction ``mu_plus`` of the way to
``+1``, unkind a fraction ``mu_minus`` of the way to ``-1``.

The simulator superposes the ``2|E|`` clocks: holding times are exponential
with rate ``2|E|`` and the ringing edge is uniform over oriented edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph import Graph
from .rng import EventStream, as_stream

REFRESH_INTERVAL = 1 << 20


class OutOfRange(ValueError):
    pass


def _check_unit(name, value):
    a = np.asarray(value, dtype=float)
    if np.any(~(np.abs(a) <= 1.0)):
        raise OutOfRange(f"{name} must lie in [-1, 1], got {value!r}")


@dataclass(frozen=True)
class Params:
    mu_plus: float
    mu_minus: float

    def __post_init__(self):
        for name in ("mu_plus", "mu_minus"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise OutOfRange(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def optimist(self) -> bool:
        return self.mu_minus < self.mu_plus

    def mirrored(self) -> "Params":
        """Parameters of the image process under ``xi -> -xi``.

        Negating every belief exchanges kind and unkind interactions, so the
        pessimist case ``mu_minus > mu_plus`` is the optimist case with the two
        sensitivities swapped.
        """
        return Params(self.mu_minus, self.mu_plus)


@dataclass
class State:
    beliefs: np.ndarray
    clock: float = 0.0
    total: float = 0.0
    event_count: int = 0

    @property
    def n(self) -> int:
        return self.beliefs.shape[0]

    def copy(self) -> "State":
        return State(self.beliefs.copy(), self.clock, self.total, self.event_count)

    def refresh_total(self) -> None:
        self.total = math.fsum(self.beliefs.tolist())

    def mirrored(self) -> "State":
        return State(-self.beliefs, self.clock, -self.total, self.event_count)


@dataclass(frozen=True)
class Event:
    dt: float
    source: int
    target: int
    kind: bool
    old_belief: float
    new_belief: float


def state_from_beliefs(beliefs) -> State:
    b = np.array(beliefs, dtype=np.float64)
    _check_unit("beliefs", b)
    s = State(b)
    s.refresh_total()
    return s


def init_uniform(g: Graph, rng) -> State:
    """i.i.d. Uniform(-1, 1) beliefs drawn from ``rng`` (an EventStream or seed)."""
    stream = as_stream(rng)
    return state_from_beliefs(stream.uniform(-1.0, 1.0, g.n_vertices))


def init_constant(g: Graph, value: float) -> State:
    _check_unit("value", value)
    return state_from_beliefs(np.full(g.n_vertices, float(value)))


def kind_probability(xi_x):
    _check_unit("xi_x", xi_x)
    return np.clip(0.5 + 0.5 * np.asarray(xi_x, dtype=float), 0.0, 1.0)[()]


def apply_interaction(xi_y, kind, p: Params):
    _check_unit("xi_y", xi_y)
    xi_y = np.asarray(xi_y, dtype=float)
    out = np.where(kind, xi_y + p.mu_plus * (1.0 - xi_y), xi_y - p.mu_minus * (1.0 + xi_y))
    return np.clip(out, -1.0, 1.0)[()]


@dataclass(frozen=True)
class StopRule:
    """Composite stopping rule; fires when any active component fires.

    ``max_events`` is mandatory so that every run terminates.  ``epsilon``
    enables the thresholds ``X < -eps N`` / ``X > (1 - eps) N`` (``symmetric``
    replaces the upper one by ``X > eps N``); ``delta`` enables absorption,
    declared once every belief is within ``delta`` of a common extreme.
    """

    max_events: int
    epsilon: float | None = None
    delta: float | None = None
    symmetric: bool = False

    def __post_init__(self):
        if self.max_events is None or self.max_events < 0:
            raise ValueError("StopRule needs a non-negative max_events")
        if self.epsilon is not None and not (0.0 < self.epsilon < 0.5):
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.delta is not None and not (0.0 <= self.delta < 1.0):
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")

    def thresholds(self, n: int) -> tuple[float, float]:
        lower = -self.epsilon * n
        upper = self.epsilon * n if self.symmetric else (1.0 - self.epsilon) * n
        return lower, upper


REASONS = {
    kernels.CONTINUE: "max_events",
    kernels.HIT_MINUS: "hit_minus",
    kernels.HIT_PLUS: "hit_plus",
    kernels.ABSORBED_PLUS: "absorbed_plus",
    kernels.ABSORBED_MINUS: "absorbed_minus",
}


@dataclass
class EventLog:
    edge: np.ndarray
    kind: np.ndarray
    old: np.ndarray
    new: np.ndarray
    dt: np.ndarray

    @classmethod
    def empty(cls, size: int) -> "EventLog":
        return cls(
            np.zeros(size, dtype=np.int64),
            np.zeros(size, dtype=np.uint8),
            np.zeros(size),
            np.zeros(size),
            np.zeros(size),
        )

    def __len__(self):
        return self.edge.shape[0]

    def events(self, g: Graph) -> list[Event]:
        src, dst = g.src, g.dst
        return [
            Event(float(self.dt[i]), int(src[e]), int(dst[e]), bool(self.kind[i]),
                  float(self.old[i]), float(self.new[i]))
            for i, e in enumerate(self.edge.tolist())
        ]

    def states(self, initial: np.ndarray, g: Graph) -> np.ndarray:
        """Configurations visited, one row per event plus the initial one."""
        out = np.empty((len(self) + 1, initial.shape[0]))
        out[0] = initial
        targets = g.dst[self.edge]
        for i, (y, v) in enumerate(zip(targets.tolist(), self.new.tolist())):
            row = out[i + 1]
            row[:] = out[i]
            row[y] = v
        return out


@dataclass
class RunOutcome:
    state: State
    reason: str
    events: int
    series: list[tuple[int, float, float]] = field(default_factory=list)
    log: EventLog | None = None


def _initial_status(state: State, stop: StopRule) -> int:
    if stop.epsilon is not None:
        lower, upper = stop.thresholds(state.n)
        if state.total < lower:
            return kernels.HIT_MINUS
        if state.total > upper:
            return kernels.HIT_PLUS
    if stop.delta is not None:
        if np.all(state.beliefs >= 1.0 - stop.delta):
            return kernels.ABSORBED_PLUS
        if np.all(state.beliefs <= -1.0 + stop.delta):
            return kernels.ABSORBED_MINUS
    return kernels.CONTINUE


def run(state: State, g: Graph, p: Params, stop: StopRule, rng: EventStream,
        stride: int | None = None, record: bool = False, kernel=None) -> RunOutcome:
    """Advance ``state`` in place until ``stop`` fires.

    ``stride`` collects ``(event, t, X)`` rows for the initial state, every
    event count divisible by ``stride``, and the final state.  ``record`` keeps
    the full event log (memory grows with the number of events).
    """
    if state.n != g.n_vertices:
        raise ValueError("state and graph sizes differ")
    run_chunk = kernel or kernels.run_chunk
    n = state.n
    series = []
    if stride is not None:
        if stride < 1:
            raise ValueError("stride must be positive")
        series.append((state.event_count, state.clock, state.total))

    logs = []
    status = _initial_status(state, stop)
    done_total = 0
    thresholds = stop.epsilon is not None
    lower, upper = stop.thresholds(n) if thresholds else (0.0, 0.0)
    absorption = stop.delta is not None
    delta = stop.delta if absorption else 0.0
    n_plus = int(np.count_nonzero(state.beliefs >= 1.0 - delta)) if absorption else 0
    n_minus = int(np.count_nonzero(state.beliefs <= -1.0 + delta)) if absorption else 0

    while status == kernels.CONTINUE and done_total < stop.max_events:
        chunk = stop.max_events - done_total
        chunk = min(chunk, REFRESH_INTERVAL - state.event_count % REFRESH_INTERVAL)
        if stride is not None:
            chunk = min(chunk, stride - state.event_count % stride)
        rng.reserve(3)
        chunk = min(chunk, rng.available // 3)
        log = EventLog.empty(chunk) if record else None
        extra = () if log is None else (log.edge, log.kind, log.old, log.new, log.dt)
        done, rng.pos, state.total, state.clock, n_plus, n_minus, status = run_chunk(
            state.beliefs, g.src, g.dst, p.mu_plus, p.mu_minus, rng.buf, rng.pos,
            chunk, state.total, state.clock, lower, upper, thresholds, delta,
            absorption, n_plus, n_minus, *extra,
        )
        state.event_count += done
        done_total += done
        if log is not None:
            logs.append(EventLog(*(a[:done] for a in extra)))
        if state.event_count % REFRESH_INTERVAL == 0 and done:
            state.refresh_total()
        if stride is not None and state.event_count % stride == 0 and done:
            series.append((state.event_count, state.clock, state.total))

    if stride is not None and series[-1][0] != state.event_count:
        series.append((state.event_count, state.clock, state.total))
    full_log = None
    if record:
        full_log = EventLog(*(np.concatenate(parts) for parts in zip(*(
            (lg.edge, lg.kind, lg.old, lg.new, lg.dt) for lg in logs
        )))) if logs else EventLog.empty(0)
    return RunOutcome(state, REASONS[status], done_total, series, full_log)


def step(state: State, g: Graph, p: Params, rng: EventStream, kernel=None) -> Event:
    """Apply exactly one event and return its record."""
    out = run(state, g, p, StopRule(max_events=1), rng, record=True, kernel=kernel)
    return out.log.events(g)[0]

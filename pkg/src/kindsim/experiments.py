"""Stopping rules, brute-force oracles and Monte Carlo experiments."""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from .dynamics import OutOfRange, Params, State, StopRule, init_uniform, run, state_from_beliefs
from .functionals import (
    CertificationSpec,
    CertifiedC,
    DegenerateDrift,
    certify_c_epsilon,
    mgf_uniform,
)
from .graph import Graph, GraphSpec, generate
from .rng import TAG_SWEEP_ROW, EventStream, derive_seed

DEFAULT_EVENT_BUDGET = 10_000_000
DEFAULT_DELTA = 1e-6
ORACLE_LIMIT = 10_000


class MismatchedN(ValueError):
    pass


class TooLarge(ValueError):
    pass


class AllCensored(RuntimeError):
    pass


class Classification(enum.Enum):
    CONTINUE = "continue"
    HIT_MINUS = "hit_minus"
    HIT_PLUS = "hit_plus"


class Absorption(enum.Enum):
    NONE = "none"
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class StoppingSpec:
    """Thresholds ``-eps N`` and ``(1 - eps) N`` for the total kindness.

    ``symmetric=True`` is an auxiliary mode with thresholds ``-eps N`` and
    ``+eps N``, used for symmetry checks at ``mu_plus == mu_minus``.
    """

    epsilon: float
    n: int
    symmetric: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def lower(self) -> float:
        return -self.epsilon * self.n

    @property
    def upper(self) -> float:
        return self.epsilon * self.n if self.symmetric else (1.0 - self.epsilon) * self.n

    def stop_rule(self, max_events: int) -> StopRule:
        return StopRule(max_events=max_events, epsilon=self.epsilon, symmetric=self.symmetric)


def classify(state: State, spec: StoppingSpec) -> Classification:
    if state.n != spec.n:
        raise MismatchedN(f"state has {state.n} vertices, spec expects {spec.n}")
    below = state.total < spec.lower
    above = state.total > spec.upper
    if below and above:
        raise AssertionError("total is below the lower and above the upper threshold")
    if below:
        return Classification.HIT_MINUS
    if above:
        return Classification.HIT_PLUS
    return Classification.CONTINUE


def detect_absorption(state: State, delta: float) -> Absorption:
    if not 0.0 <= delta < 1.0:
        raise OutOfRange(f"delta must lie in [0, 1), got {delta}")
    b = state.beliefs
    if np.all(b >= 1.0 - delta):
        return Absorption.PLUS
    if np.all(b <= -1.0 + delta):
        return Absorption.MINUS
    return Absorption.NONE


def one_step_oracle(state: State, g: Graph, p: Params, c: float,
                    limit: int = ORACLE_LIMIT) -> tuple[float, float]:
    """Exact generator of ``X`` and ``c**-X`` by enumerating every outcome.

    For each oriented edge, both the kind and the unkind outcome are applied
    to a copy of the configuration and the new totals are summed from
    scratch; nothing here reuses the closed-form drift expressions.
    """
    if g.n_oriented > limit:
        raise TooLarge(f"{g.n_oriented} oriented edges exceed the oracle limit {limit}")
    if not c > 0:
        raise ValueError("c must be positive")
    beliefs = state.beliefs.tolist()
    x_old = math.fsum(beliefs)
    cx_old = c ** -x_old
    drift_x = 0.0
    drift_cx = 0.0
    for x, y in g.oriented_edges():
        p_kind = 0.5 + beliefs[x] / 2
        outcomes = (
            (p_kind, beliefs[y] + p.mu_plus * (1.0 - beliefs[y])),
            (1.0 - p_kind, beliefs[y] - p.mu_minus * (1.0 + beliefs[y])),
        )
        for prob, value in outcomes:
            after = list(beliefs)
            after[y] = value
            x_new = math.fsum(after)
            drift_x += prob * (x_new - x_old)
            drift_cx += prob * (c ** -x_new - cx_old)
    return drift_x, drift_cx


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    p_hat = successes / trials
    return min(float(ci.low), p_hat), max(float(ci.high), p_hat)


@dataclass
class Estimate:
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    seed: int
    hits_plus: int = 0
    censored: int = 0
    mean_events: float = 0.0
    initial_totals: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_counts(cls, successes, trials, seed, **extra) -> "Estimate":
        lo, hi = wilson_interval(successes, trials)
        return cls(successes, trials, successes / trials, lo, hi, seed, **extra)

    @property
    def upper_for_bound(self) -> float:
        """Upper confidence value used against a bound; rule of three when nothing was hit."""
        return 3.0 / self.trials if self.successes == 0 else self.ci_high


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("KINDSIM_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def map_replicates(worker: Callable[[int], tuple], count: int, threads: int | None = 1) -> list:
    """Run ``worker(i)`` for ``i in range(count)``; results come back in index order.

    The compiled kernel releases the GIL, so threads give real parallelism.
    Results never depend on the number of threads.
    """
    threads = resolve_threads(threads)
    if threads == 1 or count < 2:
        return [worker(i) for i in range(count)]
    chunks = [range(lo, min(lo + 64, count)) for lo in range(0, count, 64)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda r: [worker(i) for i in r], chunks)
        return [res for part in parts for res in part]


def estimate_exit_prob(g: Graph, p: Params, spec: StoppingSpec, replicates: int,
                       event_budget: int = DEFAULT_EVENT_BUDGET, seed: int = 0,
                       threads: int | None = 1) -> Estimate:
    """Fraction of uniform starts whose total kindness exits through the lower threshold."""
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if spec.n != g.n_vertices:
        raise MismatchedN("stopping spec and graph sizes differ")
    stop = spec.stop_rule(event_budget)

    def worker(i):
        stream = EventStream.for_replicate(seed, i)
        state = init_uniform(g, stream)
        x0 = state.total
        out = run(state, g, p, stop, stream)
        return out.reason, out.events, x0

    results = map_replicates(worker, replicates, threads)
    reasons = [r[0] for r in results]
    minus = reasons.count("hit_minus")
    plus = reasons.count("hit_plus")
    censored = reasons.count("max_events")
    if minus + plus + censored != replicates:
        raise AssertionError("censoring accounting is inconsistent")
    if censored == replicates:
        raise AllCensored(
            f"all {replicates} replicates exhausted the {event_budget}-event budget"
        )
    return Estimate.from_counts(
        minus, replicates, seed,
        hits_plus=plus,
        censored=censored,
        mean_events=float(np.mean([r[1] for r in results])),
        initial_totals=np.array([r[2] for r in results]),
    )


@dataclass
class SweepRow:
    N: int
    epsilon: float
    mu_plus: float
    mu_minus: float
    estimate: Estimate
    c_eps: float
    bound: float
    certificate: CertifiedC | None = None

    @property
    def replicates(self) -> int:
        return self.estimate.trials

    @property
    def censored(self) -> int:
        return self.estimate.censored

    @property
    def zero_hits(self) -> bool:
        return self.estimate.successes == 0

    @property
    def bound_ok(self) -> bool:
        return self.estimate.upper_for_bound <= self.bound

    def initial_mgf(self) -> tuple[float, float, float]:
        """Empirical ``E[c**-X0]``, its standard error, and ``g(c)**N``."""
        v = self.c_eps ** -self.estimate.initial_totals
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("inf")
        return float(v.mean()), se, mgf_uniform(self.c_eps) ** self.N


@dataclass
class SweepReport:
    rows: list[SweepRow]
    slope: float

    @property
    def bounds_ok(self) -> bool:
        return all(r.bound_ok for r in self.rows)

    @property
    def monotone_ok(self) -> bool:
        """No significant increase of the estimate with ``N``."""
        return all(b.estimate.p_hat <= a.estimate.ci_high for a, b in zip(self.rows, self.rows[1:]))


def decay_sweep(family: GraphSpec, Ns: Sequence[int], p: Params, epsilon: float,
                replicates: int, event_budget: int = DEFAULT_EVENT_BUDGET, seed: int = 0,
                cert_spec: CertificationSpec | None = None,
                threads: int | None = 1) -> SweepReport:
    """Estimate the lower-exit probability for each ``N`` and set it against ``c_eps**(-eps N/2)``.

    Each row uses the seed ``derive_seed(seed, TAG_SWEEP_ROW, N)`` for graph
    generation, certification and replicates.
    """
    if not p.mu_minus < p.mu_plus:
        raise DegenerateDrift("degenerate drift: decay sweep needs mu_minus < mu_plus")
    if list(Ns) != sorted(Ns):
        raise ValueError("Ns must be ascending")
    rows = []
    for n in Ns:
        row_seed = derive_seed(seed, TAG_SWEEP_ROW, n)
        g = generate(family.with_n(n), row_seed)
        cert = certify_c_epsilon(g, p, epsilon, cert_spec, seed=row_seed)
        est = estimate_exit_prob(g, p, StoppingSpec(epsilon, g.n_vertices), replicates,
                                 event_budget, row_seed, threads)
        bound = cert.c ** (-epsilon * g.n_vertices / 2)
        rows.append(SweepRow(g.n_vertices, epsilon, p.mu_plus, p.mu_minus, est, cert.c, bound, cert))
    ns = np.array([r.N for r in rows], dtype=float)
    logp = np.log([max(r.estimate.p_hat, 1.0 / (r.replicates + 1)) for r in rows])
    slope = float(np.polyfit(ns, logp, 1)[0]) if len(rows) > 1 else float("nan")
    return SweepReport(rows, slope)


@dataclass
class FixationReport:
    outcomes: list[tuple[int, str, int, float]]
    delta: float
    seed: int

    @property
    def replicates(self) -> int:
        return len(self.outcomes)

    def count(self, outcome: str) -> int:
        return sum(1 for o in self.outcomes if o[1] == outcome)

    @property
    def plus(self) -> int:
        return self.count("plus")

    @property
    def minus(self) -> int:
        return self.count("minus")

    @property
    def censored(self) -> int:
        return self.count("censored")

    @property
    def fraction_plus(self) -> float:
        return self.plus / self.replicates

    @property
    def fraction_minus(self) -> float:
        return self.minus / self.replicates

    @property
    def mean_events(self) -> float:
        ev = [o[2] for o in self.outcomes if o[1] != "censored"]
        return float(np.mean(ev)) if ev else float("nan")


_FIX_OUTCOME = {"absorbed_plus": "plus", "absorbed_minus": "minus", "max_events": "censored"}


def fixation_experiment(g: Graph, p: Params, initial, replicates: int,
                        delta: float = DEFAULT_DELTA,
                        event_budget: int = DEFAULT_EVENT_BUDGET, seed: int = 0,
                        threads: int | None = 1) -> FixationReport:
    """Run replicates until ``delta``-absorption or the event budget.

    ``initial`` is ``"uniform"``, a fixed belief vector, or a callable taking
    the replicate's EventStream and returning a State.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if isinstance(initial, str):
        if initial != "uniform":
            raise ValueError(f"unknown initial configuration {initial!r}")
        make = lambda stream: init_uniform(g, stream)  # noqa: E731
    elif callable(initial):
        make = initial
    else:
        fixed = np.array(initial, dtype=float)
        if fixed.shape != (g.n_vertices,):
            raise MismatchedN("initial configuration does not match the graph")
        make = lambda stream: state_from_beliefs(fixed)  # noqa: E731
    stop = StopRule(max_events=event_budget, delta=delta)

    def worker(i):
        stream = EventStream.for_replicate(seed, i)
        state = make(stream)
        out = run(state, g, p, stop, stream)
        return i, _FIX_OUTCOME[out.reason], out.events, state.total

    return FixationReport(map_replicates(worker, replicates, threads), delta, seed)


def fmt(x: float) -> str:
    return f"{x:.12g}"


SWEEP_HEADER = "N,eps,mu_plus,mu_minus,replicates,hits_minus,hits_plus,censored,p_hat,ci_low,ci_high,c_eps,bound"
FIXATION_HEADER = "replicate,outcome,events,final_X"


def sweep_csv(report: SweepReport) -> str:
    lines = [SWEEP_HEADER]
    for r in report.rows:
        e = r.estimate
        lines.append(",".join([
            str(r.N), fmt(r.epsilon), fmt(r.mu_plus), fmt(r.mu_minus), str(e.trials),
            str(e.successes), str(e.hits_plus), str(e.censored), fmt(e.p_hat),
            fmt(e.ci_low), fmt(e.ci_high), fmt(r.c_eps), fmt(r.bound),
        ]))
    return "\n".join(lines) + "\n"


def fixation_csv(report: FixationReport) -> str:
    lines = [FIXATION_HEADER]
    lines += [f"{i},{o},{ev},{fmt(x)}" for i, o, ev, x in report.outcomes]
    return "\n".join(lines) + "\n"


def trajectory_csv(series) -> str:
    lines = ["event,t,X"]
    lines += [f"{ev},{fmt(t)},{fmt(x)}" for ev, t, x in series]
    return "\n".join(lines) + "\n"

"""Closed-form drift functionals and numeric certification of ``c_eps``.

The scalar functions accept numpy arrays and broadcast.  ``phi`` and
``big_phi`` are evaluated as ``w_kind * expm1(a ln c) + w_unkind * expm1(b ln c)``,
which equals the weighted sum of powers minus one because the two weights
add up to one; the ``expm1`` form is exactly zero at ``c = 1`` and keeps full
relative precision for ``c`` close to one, where certification happens.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import OutOfRange, Params, State, StopRule, _check_unit, init_uniform, run
from .graph import Graph, shortest_path
from .rng import TAG_CERT_RANDOM, TAG_CERT_TRAJECTORY, EventStream, seed_sequence

SERIES_SWITCH = 1e-4


class NonPositiveC(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class NoCertifiableC(RuntimeError):
    pass


class DegenerateDrift(ValueError):
    pass


def _beliefs(state):
    return state.beliefs if isinstance(state, State) else np.asarray(state, dtype=float)


def total_kindness(state) -> float:
    return math.fsum(_beliefs(state).tolist())


def rho(xi_x, xi_y, p: Params):
    """Expected change of ``xi(y)`` when the edge ``x -> y`` fires."""
    _check_unit("xi_x", xi_x)
    _check_unit("xi_y", xi_y)
    xi_x = np.asarray(xi_x, dtype=float)
    xi_y = np.asarray(xi_y, dtype=float)
    out = ((0.5 + xi_x / 2) * p.mu_plus * (1.0 - xi_y)
           - (0.5 - xi_x / 2) * p.mu_minus * (1.0 + xi_y))
    return out[()]


def pair_drift(xi_x, xi_y, p: Params):
    _check_unit("xi_x", xi_x)
    _check_unit("xi_y", xi_y)
    xi_x = np.asarray(xi_x, dtype=float)
    xi_y = np.asarray(xi_y, dtype=float)
    return ((p.mu_plus - p.mu_minus) * (1.0 - xi_x * xi_y))[()]


def generator_drift_X(state, g: Graph, p: Params) -> float:
    """Instantaneous expected rate of change of the total kindness."""
    b = _beliefs(state)
    e = np.asarray(g.edges, dtype=np.int64)
    return float(np.sum(pair_drift(b[e[:, 0]], b[e[:, 1]], p)))


def _check_c(c):
    a = np.asarray(c, dtype=float)
    if np.any(~(a > 0.0)):
        raise NonPositiveC(f"c must be positive, got {c!r}")


def phi(xi_x, xi_y, c, p: Params):
    _check_unit("xi_x", xi_x)
    _check_unit("xi_y", xi_y)
    _check_c(c)
    xi_x = np.asarray(xi_x, dtype=float)
    xi_y = np.asarray(xi_y, dtype=float)
    log_c = np.log(np.asarray(c, dtype=float))
    kind = (0.5 + xi_x / 2) * np.expm1(-p.mu_plus * (1.0 - xi_y) * log_c)
    unkind = (0.5 - xi_x / 2) * np.expm1(p.mu_minus * (1.0 + xi_y) * log_c)
    return (kind + unkind)[()]


def big_phi(state, g: Graph, c, p: Params):
    """Sum of ``phi`` over all oriented edges.

    ``state`` may be a State, a belief vector, or a 2-D array of belief
    vectors (one per row), in which case one value per row is returned.
    Grouping by target vertex reduces the cost to one sparse product per
    batch plus ``O(N)`` work per value of ``c``.
    """
    _check_c(c)
    b = _beliefs(state)
    single = b.ndim == 1
    S = np.atleast_2d(b)
    _check_unit("beliefs", S)
    adj = g.adjacency_matrix()
    w_kind = (adj @ ((1.0 + S) / 2).T).T
    w_unkind = (adj @ ((1.0 - S) / 2).T).T
    return _big_phi_from_weights(S, w_kind, w_unkind, float(c), p, single)


def _big_phi_from_weights(S, w_kind, w_unkind, c, p, single=False):
    log_c = math.log(c)
    vals = np.sum(
        w_kind * np.expm1(-p.mu_plus * (1.0 - S) * log_c)
        + w_unkind * np.expm1(p.mu_minus * (1.0 + S) * log_c),
        axis=1,
    )
    return float(vals[0]) if single else vals


def mgf_uniform(c: float) -> float:
    """``E[c**-U]`` for ``U ~ Uniform(-1, 1)``, i.e. ``(c^2 - 1) / (2 c ln c)``."""
    if not c > 0:
        raise NonPositiveC(f"c must be positive, got {c!r}")
    if abs(c - 1.0) <= SERIES_SWITCH:
        log_c = math.log(c)
        return 1.0 if log_c == 0.0 else math.sinh(log_c) / log_c
    # (c - 1)(c + 1) avoids the cancellation in c*c - 1
    return (c - 1.0) * (c + 1.0) / (2.0 * c * math.log(c))


def mgf_margin(c: float, epsilon: float) -> float:
    """Smallest slack in ``1/2 < g(c) < c**(eps/2)``; positive iff both hold."""
    g = mgf_uniform(c)
    return min(g - 0.5, c ** (epsilon / 2) - g)


def lemma5_check(c: float, epsilon: float) -> bool:
    if not c > 1.0:
        raise OutOfRange(f"c must exceed 1, got {c!r}")
    if not 0.0 < epsilon < 0.5:
        raise OutOfRange(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    g = mgf_uniform(c)
    return 0.5 < g < c ** (epsilon / 2)


def c_grid(c_max: float = 1.5, factor: float = 0.8, points: int = 50) -> list[float]:
    """Geometric grid descending from ``c_max`` toward one: ``1 + (c_max - 1) factor**k``."""
    if not c_max > 1.0 or not 0.0 < factor < 1.0 or points < 1:
        raise ValueError("need c_max > 1, factor in (0, 1) and points >= 1")
    return [1.0 + (c_max - 1.0) * factor ** k for k in range(points)]


def mgf_window_end(epsilon: float, grid: list[float] | None = None) -> float | None:
    """Right end ``c*`` of the longest grid prefix ``(1, c*]`` on which both inequalities hold."""
    grid = sorted(grid or c_grid())
    best = None
    for c in grid:
        if not lemma5_check(c, epsilon):
            break
        best = c
    return best


def witness_pair(state, g: Graph, epsilon: float) -> tuple[int, int]:
    """Neighbors ``(x, y)`` with ``xi(x) xi(y) <= 1 - eps``.

    Case one: some belief lies in ``[-eps, 1 - eps]``; pair that vertex with its
    lowest-index neighbor.  Case two: every belief is below ``-eps`` or above
    ``1 - eps`` and both kinds occur; walk a shortest path between the first
    vertex of each kind and return the first adjacent pair that crosses.
    """
    b = _beliefs(state)
    lo, hi = -epsilon, 1.0 - epsilon
    inside = np.flatnonzero((b >= lo) & (b <= hi))
    if inside.size:
        x = int(inside[0])
        return x, g.adjacency[x][0]
    low = np.flatnonzero(b < lo)
    high = np.flatnonzero(b > hi)
    if low.size == 0 or high.size == 0:
        raise PreconditionViolated("every belief is on the same side of the window; state is past T_eps")
    path = shortest_path(g, int(low[0]), int(high[0]))
    for a, c in zip(path, path[1:]):
        if b[a] < lo and b[c] > hi:
            return a, c
    raise AssertionError("shortest path has no crossing pair")  # pragma: no cover


@dataclass(frozen=True)
class CertificationSpec:
    c_max: float = 1.5
    factor: float = 0.8
    grid_points: int = 50
    trajectories: int = 100
    random_states: int = 10_000
    event_budget: int = 1_000_000
    max_extreme_edges: int = 2000


@dataclass
class CertifiedC:
    c: float
    epsilon: float
    mu_plus: float
    mu_minus: float
    graph: dict
    seed: int
    method: dict = field(default_factory=dict)

    @property
    def max_phi(self) -> float:
        return self.method["max_phi"]

    @property
    def mgf_margin(self) -> float:
        return self.method["mgf_margin"]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CertifiedC":
        return cls(**json.loads(text))


def trajectory_states(g: Graph, p: Params, epsilon: float, stream: EventStream,
                      event_budget: int) -> np.ndarray:
    """Pre-``T_eps`` configurations of one trajectory from a uniform start."""
    state = init_uniform(g, stream)
    initial = state.beliefs.copy()
    out = run(state, g, p, StopRule(max_events=event_budget, epsilon=epsilon), stream, record=True)
    states = out.log.states(initial, g)
    if out.reason in ("hit_minus", "hit_plus"):
        states = states[:-1]
    return states


def _random_pre_threshold_states(g, epsilon, count, seed):
    n = g.n_vertices
    lower, upper = -epsilon * n, (1.0 - epsilon) * n
    rng = np.random.default_rng(seed_sequence(seed, TAG_CERT_RANDOM, 0))
    kept = []
    have = 0
    for _ in range(1000):
        if have >= count:
            break
        batch = rng.uniform(-1.0, 1.0, size=(count, n))
        x = batch.sum(axis=1)
        batch = batch[(x >= lower) & (x <= upper)]
        kept.append(batch)
        have += batch.shape[0]
    out = np.concatenate(kept) if kept else np.empty((0, n))
    return out[:count]


def _extreme_states(g, epsilon, max_edges):
    vals = (-epsilon, 1.0 - epsilon)
    rows = []
    for u, v in g.edges[:max_edges]:
        for background in (1.0, -1.0):
            for a in vals:
                for b in vals:
                    s = np.full(g.n_vertices, background)
                    s[u], s[v] = a, b
                    rows.append(s)
    return np.array(rows)


def certification_ensemble(g: Graph, p: Params, epsilon: float, spec: CertificationSpec,
                           seed: int) -> tuple[np.ndarray, dict]:
    parts = [
        trajectory_states(g, p, epsilon, EventStream(seed_sequence(seed, TAG_CERT_TRAJECTORY, i)),
                          spec.event_budget)
        for i in range(spec.trajectories)
    ]
    traj = np.concatenate(parts) if parts else np.empty((0, g.n_vertices))
    rand = _random_pre_threshold_states(g, epsilon, spec.random_states, seed)
    extreme = _extreme_states(g, epsilon, spec.max_extreme_edges)
    sizes = {
        "trajectories": spec.trajectories,
        "trajectory_states": int(traj.shape[0]),
        "random_states": int(rand.shape[0]),
        "extreme_states": int(extreme.shape[0]),
    }
    return np.concatenate([traj, rand, extreme]), sizes


def certify_c_epsilon(g: Graph, p: Params, epsilon: float,
                      spec: CertificationSpec | None = None, seed: int = 0) -> CertifiedC:
    """Largest grid ``c`` with ``Phi(state, c) <= 0`` on the ensemble and slack in the mgf window.

    The grid is scanned from ``c_max`` downward without assuming any
    monotonicity in ``c``; the first admissible point is returned.
    """
    spec = spec or CertificationSpec()
    if not p.mu_minus < p.mu_plus:
        raise DegenerateDrift(
            f"degenerate drift: need mu_minus < mu_plus, got {p.mu_minus} >= {p.mu_plus}"
        )
    if not 0.0 < epsilon < 0.5:
        raise OutOfRange(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    grid = c_grid(spec.c_max, spec.factor, spec.grid_points)
    S, sizes = certification_ensemble(g, p, epsilon, spec, seed)
    adj = g.adjacency_matrix()
    w_kind = (adj @ ((1.0 + S) / 2).T).T
    w_unkind = (adj @ ((1.0 - S) / 2).T).T
    rejected = []
    for c in grid:
        if not lemma5_check(c, epsilon):
            rejected.append({"c": c, "reason": "mgf_window"})
            continue
        vals = _big_phi_from_weights(S, w_kind, w_unkind, c, p)
        max_phi = float(vals.max())
        if max_phi > 0.0:
            rejected.append({"c": c, "reason": "phi", "max_phi": max_phi})
            continue
        method = {
            "grid": {"c_max": spec.c_max, "factor": spec.factor, "points": spec.grid_points,
                     "c_min": grid[-1]},
            "ensemble": sizes,
            "event_budget": spec.event_budget,
            "max_phi": max_phi,
            "mgf_margin": mgf_margin(c, epsilon),
            "rejected": len(rejected),
        }
        return CertifiedC(c, epsilon, p.mu_plus, p.mu_minus, g.descriptor(), seed, method)
    raise NoCertifiableC(
        f"no grid point in [{grid[-1]:.6g}, {grid[0]:.6g}] certifies eps={epsilon} "
        f"on {g.label}; last rejection: {rejected[-1] if rejected else None}"
    )

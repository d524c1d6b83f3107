"""Invariant battery run by ``kindsim verify``.

Each check returns ``(ok, detail)``.  Sizes are chosen so that the whole
battery finishes in seconds; the pytest suite runs the same properties at
full size.
"""
from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np

from . import functionals as F
from . import kernels
from .dynamics import (
    Params,
    StopRule,
    apply_interaction,
    init_constant,
    init_uniform,
    run,
    state_from_beliefs,
)
from .experiments import (
    Classification,
    StoppingSpec,
    classify,
    estimate_exit_prob,
    one_step_oracle,
)
from .graph import (
    GraphSpec,
    complete_graph,
    cycle_graph,
    generate,
    grid_graph,
    is_connected,
    parse_edge_list,
    serialize_edge_list,
)
from .rng import EventStream

FAULTS = ("rho-sign",)


def make_ops(fault: str | None = None) -> SimpleNamespace:
    ops = SimpleNamespace(rho=F.rho, pair_drift=F.pair_drift)
    if fault is None:
        return ops
    if fault == "rho-sign":
        ops.rho = lambda x, y, p: -F.rho(x, y, p)
        return ops
    raise ValueError(f"unknown fault {fault!r}")


def _graphs():
    return [complete_graph(2), complete_graph(5), cycle_graph(6), grid_graph(3, 3)]


def check_graph_invariants(ctx):
    specs = [GraphSpec("complete", n=5), GraphSpec("cycle", n=7), GraphSpec("grid", width=3, height=4),
             GraphSpec("erdos_renyi", n=15, p=0.3)]
    for spec in specs:
        g = generate(spec, ctx.seed)
        if not is_connected(g) or g.n_oriented != 2 * g.n_edges:
            return False, f"{spec}: connectivity or oriented-edge count"
        for u, v in g.edges:
            if u == v or v not in g.adjacency[u] or u not in g.adjacency[v]:
                return False, f"{spec}: inconsistent edge {(u, v)}"
        if sum(len(a) for a in g.adjacency) != 2 * g.n_edges:
            return False, f"{spec}: adjacency size"
        if generate(spec, ctx.seed) != g:
            return False, f"{spec}: not deterministic"
        if parse_edge_list(serialize_edge_list(g)) != g:
            return False, f"{spec}: edge-list round trip"
    return True, f"{len(specs)} graph families"


def check_range_and_monotonicity(ctx):
    rng = np.random.default_rng(ctx.seed)
    xi = rng.uniform(-1, 1, 100_000)
    mu = rng.uniform(0, 1, 2)
    p = Params(*mu)
    kind = apply_interaction(xi, True, p)
    unkind = apply_interaction(xi, False, p)
    ok = (np.all(np.abs(kind) <= 1) and np.all(np.abs(unkind) <= 1)
          and np.all(kind >= xi) and np.all(unkind <= xi))
    return bool(ok), "1e5 random beliefs"


def check_dynamics_trajectory(ctx):
    g = grid_graph(4, 4)
    p = Params(0.5, 0.2)
    logs = []
    for _ in range(2):
        s = EventStream.for_replicate(ctx.seed, 0)
        st = init_uniform(g, s)
        out = run(st, g, p, StopRule(max_events=20_000), s, record=True)
        logs.append((st, out.log))
    (st, log), (st2, log2) = logs
    if not (np.array_equal(log.new, log2.new) and np.array_equal(log.edge, log2.edge)):
        return False, "same seed gave different event sequences"
    if abs(st.total - math.fsum(st.beliefs.tolist())) > 1e-9 * st.n:
        return False, "cached total drifted"
    if np.max(np.abs(log.new - log.old)) > 2.0:
        return False, "increment larger than two"
    return True, "determinism, cache coherence, increment bound over 2e4 events"


def check_absorbing_fixed(ctx):
    g = complete_graph(6)
    p = Params(0.7, 0.3)
    for v in (1.0, -1.0):
        st = init_constant(g, v)
        before = st.beliefs.copy()
        run(st, g, p, StopRule(max_events=10_000), EventStream(ctx.seed))
        if not np.array_equal(st.beliefs, before):
            return False, f"{v:+g}_V moved"
    return True, "+-1_V unchanged over 1e4 events"


def check_kernel_agreement(ctx):
    if kernels.c_run_chunk is None:
        return True, "compiled kernel not built; skipped"
    g = complete_graph(12)
    p = Params(0.5, 0.2)
    finals = []
    for k in (kernels.py_run_chunk, kernels.c_run_chunk):
        s = EventStream(ctx.seed)
        st = init_uniform(g, s)
        run(st, g, p, StopRule(max_events=5_000), s, kernel=k)
        finals.append((st.beliefs.tobytes(), st.total, st.clock))
    return finals[0] == finals[1], "python and compiled kernels agree bitwise"


def check_pair_drift_identity(ctx):
    rng = np.random.default_rng(ctx.seed)
    x, y = rng.uniform(-1, 1, (2, 100_000))
    worst = 0.0
    for mp, mm in rng.uniform(0, 1, (5, 2)):
        p = Params(mp, mm)
        lhs = ctx.ops.rho(x, y, p) + ctx.ops.rho(y, x, p)
        worst = max(worst, float(np.max(np.abs(lhs - (mp - mm) * (1 - x * y)))))
    return worst <= 1e-12, f"max deviation {worst:.3g}"


def check_pair_drift_nonnegative(ctx):
    rng = np.random.default_rng(ctx.seed + 1)
    x, y = rng.uniform(-1, 1, (2, 100_000))
    mm, mp = np.sort(rng.uniform(0, 1, 2))
    v = ctx.ops.pair_drift(x, y, Params(mp, mm))
    return bool(np.all(v >= 0)), f"min {float(v.min()):.3g}"


def check_phi_derivative(ctx):
    rng = np.random.default_rng(ctx.seed + 2)
    x, y = rng.uniform(-1, 1, (2, 10_000))
    mp, mm = rng.uniform(0, 1, 2)
    p = Params(mp, mm)
    h = 1e-5

    def pair(c):
        return F.phi(x, y, c, p) + F.phi(y, x, c, p)

    fd = (pair(1 + h) - pair(1 - h)) / (2 * h)
    err = float(np.max(np.abs(fd + F.pair_drift(x, y, p))))
    return err <= 1e-6, f"max error {err:.3g}"


def check_mgf(ctx):
    g1 = F.mgf_uniform(1.0 + 1e-10)
    if abs(g1 - 1.0) > 1e-9:
        return False, f"g(1+) = {g1}"
    h = 1e-6
    c = 1.0 + 1e-3
    deriv = (F.mgf_uniform(c + h) - F.mgf_uniform(c - h)) / (2 * h)
    if not abs(deriv) < 1e-2:
        return False, f"g'(1+1e-3) = {deriv}"
    cs = np.linspace(1.0 + 1e-6, 2.0, 2001)
    if not all(F.mgf_uniform(v) > 0.5 for v in cs):
        return False, "g <= 1/2 somewhere on (1, 2]"
    worst = 0.0
    for v in np.linspace(0.01, 10.0, 5000):
        if v == 1.0:
            continue
        ref = math.sinh(math.log(v)) / math.log(v)
        worst = max(worst, abs(F.mgf_uniform(v) - ref) / max(1.0, abs(ref)))
    return worst <= 1e-12, f"sinh-form deviation {worst:.3g}"


def check_mgf_window(ctx):
    eps_values = sorted({0.1, 0.3, 0.45, ctx.epsilon})
    found = {e: F.mgf_window_end(e) for e in eps_values}
    ok = all(v is not None for v in found.values())
    return ok, ", ".join(f"eps={e}: c*={v}" for e, v in found.items())


def check_witness_pair(ctx):
    rng = np.random.default_rng(ctx.seed + 3)
    count = 0
    for g in _graphs() + [grid_graph(4, 5)]:
        for _ in range(200):
            eps = rng.uniform(0.01, 0.49)
            if rng.random() < 0.5:
                b = rng.uniform(-1, 1, g.n_vertices)
            else:
                b = np.where(rng.random(g.n_vertices) < 0.5,
                             rng.uniform(-1, -eps - 1e-9, g.n_vertices),
                             rng.uniform(1 - eps + 1e-9, 1, g.n_vertices))
            try:
                x, y = F.witness_pair(b, g, eps)
            except F.PreconditionViolated:
                continue
            if y not in g.adjacency[x] or not b[x] * b[y] <= 1 - eps:
                return False, f"bad pair {(x, y)} on {g.label}"
            count += 1
    return True, f"{count} calls"


def check_big_phi_at_one(ctx):
    rng = np.random.default_rng(ctx.seed + 4)
    for g in _graphs():
        S = rng.uniform(-1, 1, (200, g.n_vertices))
        if np.any(F.big_phi(S, g, 1.0, Params(*rng.uniform(0, 1, 2))) != 0.0):
            return False, g.label
    return True, "exactly zero"


def check_oracle_equivalence(ctx):
    rng = np.random.default_rng(ctx.seed + 5)
    worst = 0.0
    for g in _graphs():
        for _ in range(2):
            p = Params(*rng.uniform(0, 1, 2))
            for _ in range(20):
                st = state_from_beliefs(rng.uniform(-1, 1, g.n_vertices))
                for c in (1.05, 1.2, 2.0):
                    dx, dcx = one_step_oracle(st, g, p, c)
                    worst = max(worst, abs(dx - F.generator_drift_X(st, g, p)),
                                abs(dcx - c ** -st.total * F.big_phi(st, g, c, p)))
    return worst <= 1e-10, f"max deviation {worst:.3g}"


def check_submartingale_sign(ctx):
    rng = np.random.default_rng(ctx.seed + 6)
    worst = math.inf
    for g in _graphs():
        for _ in range(200):
            mm, mp = np.sort(rng.uniform(0, 1, 2))
            st = state_from_beliefs(rng.uniform(-1, 1, g.n_vertices))
            worst = min(worst, F.generator_drift_X(st, g, Params(mp, mm)))
    return worst >= -1e-12, f"min drift {worst:.3g}"


def check_supermartingale_replay(ctx):
    g = complete_graph(10)
    p = Params(0.5, 0.2)
    spec = F.CertificationSpec(trajectories=20, random_states=2000)
    cert = F.certify_c_epsilon(g, p, 0.3, spec, seed=ctx.seed)
    worst = -math.inf
    for i in range(10):
        states = F.trajectory_states(g, p, 0.3, EventStream.for_replicate(ctx.seed + 1, i), 10**6)
        if states.shape[0]:
            worst = max(worst, float(np.max(F.big_phi(states, g, cert.c, p))))
    return worst <= 1e-12, f"c_eps={cert.c:.6g}, max Phi on fresh trajectories {worst:.3g}"


def check_strict_thresholds(ctx):
    g = complete_graph(10)
    spec = StoppingSpec(0.3, 10)
    for total in (spec.lower, spec.upper):
        st = init_constant(g, 0.0)
        st.total = total
        if classify(st, spec) is not Classification.CONTINUE:
            return False, f"fired at X = {total}"
    return True, "no firing at X equal to a threshold"


def check_estimate_accounting(ctx):
    g = complete_graph(8)
    p = Params(0.5, 0.2)
    spec = StoppingSpec(0.3, 8)
    a = estimate_exit_prob(g, p, spec, 200, 2000, ctx.seed)
    b = estimate_exit_prob(g, p, spec, 200, 2000, ctx.seed)
    ok = (a.successes + a.hits_plus + a.censored == a.trials
          and (a.successes, a.hits_plus, a.censored) == (b.successes, b.hits_plus, b.censored))
    return ok, f"{a.successes}/{a.hits_plus}/{a.censored} of {a.trials}"


CHECKS = [
    ("graph invariants", check_graph_invariants),
    ("update range and monotonicity", check_range_and_monotonicity),
    ("trajectory determinism and cache", check_dynamics_trajectory),
    ("absorbing states fixed", check_absorbing_fixed),
    ("kernel agreement", check_kernel_agreement),
    ("pair-drift identity", check_pair_drift_identity),
    ("pair-drift nonnegativity", check_pair_drift_nonnegative),
    ("phi derivative identity", check_phi_derivative),
    ("uniform mgf properties", check_mgf),
    ("mgf window prefix", check_mgf_window),
    ("witness pair postcondition", check_witness_pair),
    ("big_phi at c=1", check_big_phi_at_one),
    ("one-step oracle equivalence", check_oracle_equivalence),
    ("submartingale sign", check_submartingale_sign),
    ("supermartingale replay", check_supermartingale_replay),
    ("strict thresholds", check_strict_thresholds),
    ("censoring accounting and seed stability", check_estimate_accounting),
]


def run_battery(seed: int = 0, epsilon: float = 0.3, fault: str | None = None):
    """Run every check; returns a list of ``(name, ok, detail)``."""
    ctx = SimpleNamespace(seed=seed, epsilon=epsilon, ops=make_ops(fault))
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results

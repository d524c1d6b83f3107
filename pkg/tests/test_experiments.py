import math

import numpy as np
import pytest

from kindsim import experiments as E
from kindsim.dynamics import OutOfRange, Params, init_constant, state_from_beliefs
from kindsim.functionals import CertificationSpec, DegenerateDrift, big_phi, generator_drift_X
from kindsim.graph import GraphSpec, complete_graph, cycle_graph, grid_graph

P = Params(0.5, 0.2)


def state_with_total(n, total):
    return state_from_beliefs(np.full(n, total / n))


@pytest.mark.parametrize("total,expected", [
    (-3.0, E.Classification.CONTINUE),
    (-3.5, E.Classification.HIT_MINUS),
    (7.5, E.Classification.HIT_PLUS),
    (7.0, E.Classification.CONTINUE),
    (0.0, E.Classification.CONTINUE),
])
def test_classify_examples(total, expected):
    spec = E.StoppingSpec(0.3, 10)
    assert E.classify(state_with_total(10, total), spec) is expected


def test_classify_mismatched_n():
    with pytest.raises(E.MismatchedN):
        E.classify(state_with_total(9, 0.0), E.StoppingSpec(0.3, 10))


def test_stopping_spec_thresholds():
    s = E.StoppingSpec(0.3, 10)
    assert (s.lower, s.upper) == (-3.0, 7.0)
    assert E.StoppingSpec(0.3, 10, symmetric=True).upper == 3.0
    with pytest.raises(ValueError):
        E.StoppingSpec(0.5, 10)


def test_detect_absorption_examples():
    g = complete_graph(4)
    for delta in (0.0, 1e-6, 0.5):
        assert E.detect_absorption(init_constant(g, 1.0), delta) is E.Absorption.PLUS
        assert E.detect_absorption(init_constant(g, -1.0), delta) is E.Absorption.MINUS
    assert E.detect_absorption(init_constant(g, 1 - 0.05), 0.1) is E.Absorption.PLUS
    assert E.detect_absorption(state_from_beliefs([0.99, -0.99]), 0.1) is E.Absorption.NONE
    with pytest.raises(OutOfRange):
        E.detect_absorption(init_constant(g, 1.0), 1.0)


def test_oracle_examples():
    dx, dcx = E.one_step_oracle(state_from_beliefs([0.0, 0.0]), complete_graph(2), P, 1.2)
    assert dx == pytest.approx(0.3, abs=1e-15)
    assert E.one_step_oracle(init_constant(complete_graph(5), 1.0), complete_graph(5), P, 2.0) == (0.0, 0.0)


def test_oracle_matches_closed_forms_on_c6():
    g = cycle_graph(6)
    rng = np.random.default_rng(11)
    for _ in range(20):
        s = state_from_beliefs(rng.uniform(-1, 1, 6))
        dx, dcx = E.one_step_oracle(s, g, P, 1.2)
        assert dx == pytest.approx(generator_drift_X(s, g, P), abs=1e-10)
        assert dcx == pytest.approx(1.2 ** -s.total * big_phi(s, g, 1.2, P), abs=1e-10)


def test_oracle_guard():
    g = complete_graph(120)
    with pytest.raises(E.TooLarge):
        E.one_step_oracle(init_constant(g, 0.0), g, P, 1.1)
    with pytest.raises(ValueError):
        E.one_step_oracle(init_constant(complete_graph(2), 0.0), complete_graph(2), P, 0.0)


def test_wilson_interval():
    lo, hi = E.wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = E.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert (lo, hi) == pytest.approx((0.40383, 0.59617), abs=1e-5)


def test_estimate_rule_of_three():
    e = E.Estimate.from_counts(0, 1000, seed=0)
    assert e.upper_for_bound == 3 / 1000
    e = E.Estimate.from_counts(5, 1000, seed=0)
    assert e.upper_for_bound == e.ci_high
    assert 0 <= e.ci_low <= e.p_hat <= e.ci_high <= 1


def test_estimate_validation():
    g = complete_graph(5)
    spec = E.StoppingSpec(0.3, 5)
    with pytest.raises(ValueError):
        E.estimate_exit_prob(g, P, spec, 0)
    with pytest.raises(E.MismatchedN):
        E.estimate_exit_prob(g, P, E.StoppingSpec(0.3, 6), 10)
    with pytest.raises(E.AllCensored):
        E.estimate_exit_prob(complete_graph(20), P, E.StoppingSpec(0.3, 20), 5, event_budget=1)


def test_estimate_without_unkind_moves_rarely_exits_low():
    g = complete_graph(5)
    spec = E.StoppingSpec(0.3, 5)
    est = E.estimate_exit_prob(g, Params(1.0, 0.0), spec, 2000, event_budget=10**6, seed=4)
    # only starts already below -1.5 can be counted as lower exits
    x0 = est.initial_totals
    assert est.successes == int(np.sum(x0 < -1.5))
    # P(sum of 5 uniforms on (-1, 1) < -1.5) by the Irwin-Hall cdf at 1.75
    exact = (1.75 ** 5 - 5 * 0.75 ** 5) / 120
    assert est.ci_low <= exact <= est.ci_high
    assert est.successes + est.hits_plus + est.censored == est.trials


def test_estimate_symmetric_mode():
    g = complete_graph(8)
    spec = E.StoppingSpec(0.3, 8, symmetric=True)
    est = E.estimate_exit_prob(g, Params(0.4, 0.4), spec, 4000, event_budget=10**6, seed=8)
    assert est.censored == 0
    minus, plus = est.successes, est.hits_plus
    se = math.sqrt(est.trials * 0.25)
    assert abs(minus - plus) <= 1.96 * 2 * se


def test_estimate_seed_stability():
    g = cycle_graph(7)
    spec = E.StoppingSpec(0.3, 7)
    a = E.estimate_exit_prob(g, P, spec, 300, seed=99)
    b = E.estimate_exit_prob(g, P, spec, 300, seed=99, threads=3)
    assert (a.successes, a.hits_plus, a.censored, a.mean_events) == (b.successes, b.hits_plus, b.censored, b.mean_events)
    assert np.array_equal(a.initial_totals, b.initial_totals)


def test_map_replicates_order():
    assert E.map_replicates(lambda i: i * i, 200, threads=4) == [i * i for i in range(200)]


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("KINDSIM_THREADS", "3")
    assert E.resolve_threads(None) == 3
    assert E.resolve_threads(2) == 2
    monkeypatch.delenv("KINDSIM_THREADS")
    assert E.resolve_threads(None) >= 1


def test_fixation_voter_small():
    g = complete_graph(5)
    rep = E.fixation_experiment(g, Params(1.0, 1.0), [1, 1, 1, -1, -1], 2000, delta=0.0, seed=1)
    assert rep.censored == 0 and rep.plus + rep.minus == 2000
    assert abs(rep.fraction_plus - 0.6) <= 4 * math.sqrt(0.24 / 2000)


def test_fixation_from_plus_needs_no_events():
    g = cycle_graph(5)
    rep = E.fixation_experiment(g, P, [1.0] * 5, 10, delta=0.0)
    assert rep.fraction_plus == 1.0
    assert all(o[2] == 0 for o in rep.outcomes)


def test_fixation_optimist_cycle_favors_plus():
    rep = E.fixation_experiment(cycle_graph(10), P, "uniform", 200, delta=1e-6, seed=2)
    assert rep.censored == 0
    lo, _ = E.wilson_interval(rep.plus, rep.plus + rep.minus)
    assert lo > 0.5


def test_fixation_initial_sources():
    g = complete_graph(3)
    rep = E.fixation_experiment(g, P, lambda stream: init_constant(g, -1.0), 3, delta=0.0)
    assert rep.minus == 3
    with pytest.raises(E.MismatchedN):
        E.fixation_experiment(g, P, [1.0, 1.0], 3)
    with pytest.raises(ValueError):
        E.fixation_experiment(g, P, "zeros", 3)


SMALL = CertificationSpec(trajectories=10, random_states=500)


def test_decay_sweep_small():
    rep = E.decay_sweep(GraphSpec("complete", n=10), [6, 10], P, 0.3, 500,
                        event_budget=10**6, seed=5, cert_spec=SMALL)
    assert [r.N for r in rep.rows] == [6, 10]
    for r in rep.rows:
        assert 0 < r.bound < 1
        assert r.bound == r.c_eps ** (-0.3 * r.N / 2)
        assert r.censored == 0
    assert rep.bounds_ok
    assert math.isfinite(rep.slope)


def test_decay_sweep_rejects_bad_input():
    with pytest.raises(DegenerateDrift):
        E.decay_sweep(GraphSpec("complete", n=10), [10], Params(0.2, 0.2), 0.3, 10)
    with pytest.raises(ValueError):
        E.decay_sweep(GraphSpec("complete", n=10), [20, 10], P, 0.3, 10)


def test_decay_sweep_is_seed_stable_across_threads():
    args = (GraphSpec("cycle", n=8), [8, 12], P, 0.3, 200)
    a = E.decay_sweep(*args, event_budget=10**6, seed=3, cert_spec=SMALL, threads=1)
    b = E.decay_sweep(*args, event_budget=10**6, seed=3, cert_spec=SMALL, threads=4)
    assert E.sweep_csv(a) == E.sweep_csv(b)


def test_initial_mgf_row():
    rep = E.decay_sweep(GraphSpec("complete", n=10), [12], P, 0.3, 2000,
                        event_budget=10**6, seed=6, cert_spec=SMALL)
    emp, se, theory = rep.rows[0].initial_mgf()
    assert abs(emp - theory) <= 4 * se


def test_csv_formats():
    rep = E.decay_sweep(GraphSpec("complete", n=10), [6], P, 0.3, 50,
                        event_budget=10**6, seed=5, cert_spec=SMALL)
    lines = E.sweep_csv(rep).splitlines()
    assert lines[0] == "N,eps,mu_plus,mu_minus,replicates,hits_minus,hits_plus,censored,p_hat,ci_low,ci_high,c_eps,bound"
    assert len(lines) == 2 and len(lines[1].split(",")) == 13
    fix = E.fixation_experiment(complete_graph(3), P, "uniform", 4, seed=1)
    flines = E.fixation_csv(fix).splitlines()
    assert flines[0] == "replicate,outcome,events,final_X"
    assert [ln.split(",")[0] for ln in flines[1:]] == ["0", "1", "2", "3"]
    assert E.fmt(1 / 3) == "0.333333333333"
    assert E.trajectory_csv([(0, 0.0, 1.5)]) == "event,t,X\n0,0,1.5\n"

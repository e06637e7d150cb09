import numpy as np
import pytest
from hypothesis import given, settings

from ssgvi.generation import fig1, ovi_easy, tvi_chain
from ssgvi.model import Distribution, MarkovChain, MaxStrategy, MinStrategy, Player, SsgModel, UsageError
from ssgvi.solvers import (
    ALGORITHMS,
    Inner,
    SolverConfig,
    Status,
    extract_strategies,
    gaussian_elimination,
    local_optimality_check,
    solve,
    solve_bvi,
    solve_markov_chain,
    solve_ovi,
    solve_ptvi,
    solve_si,
    solve_topological,
    solve_vi,
)
from ssgvi.solvers.markov import SingularSystemError
from ssgvi.solvers.strategy import chain_values
from oracle import brute_force_value, strategy_count
from strategies import small_games

V_FIG1 = np.array([0.5, 0.5, 1.0, 0.0])


def _all_goal():
    return SsgModel.build(2, [0, 0], [[], []], 0, [0, 1])


def _all_trivial():
    d = Distribution.from_pairs
    return SsgModel.build(3, [0, 0, 0], [[("a", d([(1, 0.5), (2, 0.5)]))], [], [("z", d([(2, 1.0)]))]], 0, [1])


# -- VI -------------------------------------------------------------------------


def test_vi_fig1(fig1_model):
    r = solve_vi(fig1_model, cfg=SolverConfig(epsilon=1e-6))
    assert 0.5 - 1e-3 <= r.lower[0] <= 0.5
    assert r.diagnostics["sound"] is False


def test_vi_all_goals():
    r = solve_vi(_all_goal())
    assert r.lower.tolist() == [1.0, 1.0] and r.iterations == 0


def test_vi_chain1():
    r = solve_vi(tvi_chain(1))
    assert r.lower[0] == pytest.approx(0.6)


# -- BVI ------------------------------------------------------------------------


def test_bvi_fig1_deflate_every_step(fig1_model):
    r = solve_bvi(fig1_model, cfg=SolverConfig(epsilon=1e-6, deflate_every=1))
    assert r.status is Status.CONVERGED
    assert r.lower[0] <= 0.5 <= r.upper[0] and r.upper[0] - r.lower[0] <= 1e-6


def test_bvi_fig1_no_deflation_hits_cap(fig1_model):
    r = solve_bvi(fig1_model, cfg=SolverConfig(deflate=False, max_iterations=500))
    assert r.status is Status.ITERATION_CAP and r.upper[0] == 1.0


def test_bvi_ec_free_equals_interval_iteration():
    m = tvi_chain(1)
    a = solve_bvi(m, cfg=SolverConfig(deflate=True, deflate_every=1))
    b = solve_bvi(m, cfg=SolverConfig(deflate=False))
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
    assert a.iterations == b.iterations


def test_bvi_relative_mode(fig1_model):
    r = solve_bvi(fig1_model, cfg=SolverConfig(mode="relative"))
    assert r.status is Status.CONVERGED
    assert (r.upper[0] - r.lower[0]) / r.upper[0] <= 1e-6


def test_timeout_is_reported():
    r = solve_bvi(ovi_easy(300), cfg=SolverConfig(timeout=0.05))
    assert r.status is Status.TIMEOUT
    assert np.all(r.lower[:300] <= 0.5 + 1e-12) and np.all(r.upper[:300] >= 0.5 - 1e-12)


# -- OVI ------------------------------------------------------------------------


def test_ovi_fig1(fig1_model):
    r = solve_ovi(fig1_model)
    assert r.status is Status.CONVERGED and r.verification_phases >= 1
    assert r.lower[0] <= 0.5 <= r.upper[0] and r.upper[0] - r.lower[0] <= 1e-6


def test_ovi_trivial_model_one_phase():
    r = solve_ovi(_all_trivial())
    assert r.status is Status.CONVERGED and r.verification_phases == 1
    assert r.lower[0] == 0.5 and 0.5 <= r.upper[0] <= 0.5 + 1e-6


def test_ovi_goals_and_sinks_only():
    m = SsgModel.build(2, [0, 0], [[], [("z", Distribution.dirac(1))]], 0, [0])
    r = solve_ovi(m)
    assert r.status is Status.CONVERGED and r.verification_phases == 1
    assert r.lower.tolist() == r.upper.tolist() == [1.0, 0.0]


def test_ovi_easy_beats_bvi_at_same_budget():
    m = ovi_easy(100)
    o = solve_ovi(m, cfg=SolverConfig(max_backups=200_000))
    b = solve_bvi(m, cfg=SolverConfig(max_backups=200_000))
    assert o.status is Status.CONVERGED and b.status is Status.ITERATION_CAP
    assert np.allclose(o.lower[:100], 0.5)


def test_ovi_lower_check(fig1_model):
    r = solve_ovi(fig1_model, cfg=SolverConfig(ovi_lower_check=True))
    assert r.status is Status.CONVERGED and r.lower[0] <= 0.5 <= r.upper[0]


# -- topological ----------------------------------------------------------------


def test_tvi_chain25_stalls():
    r = solve_topological(tvi_chain(25), inner=Inner.BVI)
    assert r.status is Status.STALLED
    assert r.diagnostics["stalled_scc"]


def test_tvi_chain3_interval():
    r = solve_topological(tvi_chain(3), inner=Inner.BVI)
    assert r.status is Status.CONVERGED
    lo, hi = r.bounds_at(2)
    assert 0.6 - 1e-6 <= lo <= 0.6 <= hi <= 0.6 + 1e-6


def test_tvi_chain25_paper_interval():
    """Third chain state from the exit reproduces the published interval."""
    r = solve_topological(tvi_chain(25), inner=Inner.BVI)
    assert r.lower[22] == pytest.approx(0.5999994099140338, abs=1e-12)
    assert r.upper[22] == pytest.approx(0.6000003933906441, abs=1e-12)


def test_tvi_single_scc_matches_inner(fig1_model):
    t = solve_topological(fig1_model, inner=Inner.BVI)
    b = solve_bvi(fig1_model)
    assert np.allclose(t.lower, b.lower, atol=1e-6) and np.allclose(t.upper, b.upper, atol=1e-6)


@pytest.mark.parametrize("inner", [Inner.VI, Inner.BVI])
def test_ptvi_chain25(inner):
    r = solve_ptvi(tvi_chain(25), inner=inner)
    assert r.status is Status.PRECISE
    assert np.all(np.abs(r.lower[:25] - 0.6) <= 1e-9)


def test_ptvi_fig1(fig1_model):
    r = solve_ptvi(fig1_model)
    assert np.all(np.abs(r.lower - V_FIG1) <= 1e-9)


def test_ptvi_markov_chain_equals_chain_solve():
    m = tvi_chain(4)
    r = solve_ptvi(m)
    assert r.diagnostics["si_fallbacks"] == []
    chain = MarkovChain(m.n, tuple(a[0].dist for a in m.actions), m.goals)
    assert np.allclose(r.lower, solve_markov_chain(chain), atol=1e-12)


def test_ptvi_rejects_ovi_inner(fig1_model):
    with pytest.raises(ValueError):
        solve_ptvi(fig1_model, inner=Inner.OVI)


# -- strategies, chains, SI -------------------------------------------------------


def test_extract_strategies_at_value(fig1_model):
    sigma, tau = extract_strategies(fig1_model, None, V_FIG1, V_FIG1)
    assert tau.choice[0] == 0
    assert sigma.support[1] == {0, 1}
    assert sigma.prob(1, 0) == 0.5


def test_extract_strategies_mid_convergence(fig1_model):
    L = np.array([0.4, 0.5, 1.0, 0.0])
    sigma, _ = extract_strategies(fig1_model, None, L, L)
    assert sigma.support[1] == {1}


def test_extract_strategies_unique_argmax():
    m = tvi_chain(3)
    sigma, _ = extract_strategies(m, None, np.zeros(5), np.ones(5))
    assert all(len(sup) == 1 for sup in sigma.support.values())


def test_local_check_fig1(fig1_model):
    sigma, tau = extract_strategies(fig1_model, None, V_FIG1, V_FIG1)
    assert local_optimality_check(fig1_model, sigma, tau, V_FIG1)


def test_local_check_fails_on_looping_sigma(fig1_model):
    sigma = MaxStrategy({1: frozenset({0}), 2: frozenset({0})})
    tau = MinStrategy({0: 0, 3: 0})
    f = np.array([0.0, 0.0, 1.0, 0.0])
    v = chain_values(fig1_model, np.array([0, 1]), sigma, tau, f)
    assert v[1] == 0.0
    assert not local_optimality_check(fig1_model, sigma, tau, v)


def test_local_check_vacuous_on_chain():
    m = tvi_chain(3)
    assert local_optimality_check(m, MaxStrategy({}), MinStrategy({}), np.zeros(5))


def _chain(rows, goals):
    return MarkovChain(len(rows), tuple(Distribution.from_pairs(r) for r in rows), frozenset(goals))


def test_markov_one_step():
    v = solve_markov_chain(_chain([[(1, 0.6), (2, 0.4)], [(1, 1.0)], [(2, 1.0)]], [1]))
    assert v[0] == pytest.approx(0.6, abs=1e-15)


def test_markov_self_loop():
    v = solve_markov_chain(_chain([[(0, 0.5), (1, 0.3), (2, 0.2)], [(1, 1.0)], [(2, 1.0)]], [1]))
    assert v[0] == pytest.approx(0.6, abs=1e-15)


def test_markov_zero_states():
    v = solve_markov_chain(_chain([[(2, 1.0)], [(1, 1.0)], [(0, 0.5), (2, 0.5)]], [1]))
    assert v.tolist() == [0.0, 1.0, 0.0]


def test_gaussian_elimination_pivoting():
    A = np.array([[1e-20, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 2.0])
    assert np.allclose(gaussian_elimination(A, b), [1.0, 1.0])
    with pytest.raises(SingularSystemError):
        gaussian_elimination(np.array([[1.0, 2.0], [2.0, 4.0]]), b)


def test_si_fig1_any_tau(fig1_model):
    r = solve_si(fig1_model, initial_tau=MinStrategy({0: 0, 3: 0}))
    assert r.status is Status.PRECISE and r.lower[0] == pytest.approx(0.5, abs=1e-12)


def test_si_optimal_tau_one_round(fig1_model):
    r = solve_si(fig1_model, initial_tau=MinStrategy({0: 0, 3: 0}))
    assert r.diagnostics["rounds"] == 1


def test_si_non_stopping_min_loop():
    """Minimizer must not be stuck in its pointwise-optimal but losing loop."""
    d = Distribution.from_pairs
    acts = [
        [("to_q", d([(1, 1.0)])), ("exit", d([(2, 0.5), (3, 0.5)]))],
        [("to_m", d([(0, 1.0)])), ("to_goal", d([(2, 1.0)]))],
        [],
        [("z", d([(3, 1.0)]))],
    ]
    m = SsgModel.build(4, [Player.MAX, Player.MIN, Player.MAX, Player.MAX], acts, 0, [2])
    for alg in ("si", "ptvi", "ptbvi"):
        assert solve(m, alg).lower[0] == pytest.approx(0.5, abs=1e-12), alg


def test_unknown_algorithm(fig1_model):
    with pytest.raises(UsageError):
        solve(fig1_model, "nope")


@pytest.mark.parametrize("bad", [dict(epsilon=0), dict(deflate_every=0), dict(max_iterations=0), dict(timeout=-1)])
def test_config_validation(bad):
    with pytest.raises(UsageError):
        SolverConfig(**bad)


# -- oracle equivalence ----------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(small_games())
def test_precise_solvers_match_oracle(model):
    if strategy_count(model) > 4096:
        return
    V = brute_force_value(model)
    for alg in ("si", "ptvi", "ptbvi"):
        r = solve(model, alg)
        assert r.status is Status.PRECISE
        assert np.allclose(r.lower, V, atol=1e-9), (alg, r.lower, V)


@settings(max_examples=100, deadline=None)
@given(small_games())
def test_interval_solvers_enclose_oracle(model):
    if strategy_count(model) > 4096:
        return
    V = brute_force_value(model)
    cfg = SolverConfig(epsilon=1e-6, timeout=10.0, ovi_lower_check=True)
    for alg in ("bvi", "ovi", "tvi"):
        r = solve(model, alg, cfg)
        if r.status is Status.TIMEOUT:
            continue
        assert np.all(r.lower <= V + 1e-9) and np.all(r.upper >= V - 1e-9), alg
        if r.status.ok:
            assert np.all(r.upper - r.lower <= 1e-6), alg


def test_all_algorithms_on_fig1(fig1_model):
    for alg in ALGORITHMS:
        r = solve(fig1_model, alg)
        assert r.status.ok, alg
        assert abs(r.lower[0] - 0.5) <= 1e-3, alg


def test_bvi_converges_when_lower_bound_never_ties():
    """L(s0) approaches 0.5 only asymptotically, so Maximizer's looping action
    never ties with its exit; the end component must still be deflated."""
    d = Distribution.from_pairs
    acts = [
        [("a", d([(1, 0.3), (0, 0.7)]))],
        [("b", d([(0, 1.0)])), ("c", d([(2, 0.5), (3, 0.5)]))],
        [],
        [("e", d([(3, 1.0)]))],
    ]
    m = SsgModel.build(4, [Player.MIN, Player.MAX, Player.MAX, Player.MIN], acts, 0, [2])
    r = solve_bvi(m, cfg=SolverConfig(max_iterations=10_000))
    assert r.status is Status.CONVERGED
    assert r.lower[0] <= 0.5 <= r.upper[0]

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssgvi.bellman import (
    DiffMode,
    bellman_update,
    deflate_update,
    diff,
    diff_plus,
    diff_plus_array,
    initial_lower,
    initial_upper,
)
from ssgvi.generation import tvi_chain
from ssgvi.graph import classify_states
from oracle import brute_force_value, strategy_count
from strategies import small_games

V_FIG1 = np.array([0.5, 0.5, 1.0, 0.0])


def test_diff_examples():
    assert diff(0.4, 0.5, DiffMode.ABSOLUTE) == pytest.approx(0.1)
    assert diff(0.4, 0.5, DiffMode.RELATIVE) == pytest.approx(0.2)
    assert diff(0.0, 0.0, DiffMode.RELATIVE) == 0.0


def test_diff_plus_examples():
    assert diff_plus(0.0, 1e-6) == 0.0
    assert diff_plus(0.5, 1e-6) == pytest.approx(0.500001, abs=1e-15)
    assert diff_plus(0.9999999, 1e-6) == 1.0


@settings(max_examples=300)
@given(st.floats(0.0, 1.0), st.sampled_from([1e-3, 1e-6, 1e-9]), st.sampled_from(list(DiffMode)))
def test_diff_plus_gap_never_exceeds_eps(x, eps, mode):
    u = diff_plus(x, eps, mode)
    assert x <= u <= 1.0
    assert diff(x, u, mode) <= eps


def test_bellman_fig1(fig1_model):
    c = classify_states(fig1_model)
    f = bellman_update(fig1_model, c, initial_lower(fig1_model))
    assert f[1] == 0.5 and f[0] == 0.0


def test_bellman_fixpoint_fig1(fig1_model):
    c = classify_states(fig1_model)
    assert np.array_equal(bellman_update(fig1_model, c, V_FIG1), V_FIG1)


def test_bellman_chain2():
    m = tvi_chain(2)
    f = bellman_update(m, classify_states(m), initial_lower(m))
    assert f[1] == pytest.approx(0.6) and f[0] == 0.0


def test_gauss_seidel_uses_fresh_values():
    m = tvi_chain(2)
    c = classify_states(m)
    f = bellman_update(m, c, initial_lower(m), gauss_seidel=True)
    # s0 is updated before s1, so it still sees the old s1
    assert f[0] == 0.0 and f[1] == pytest.approx(0.6)


def test_deflate_fig1(fig1_model):
    c = classify_states(fig1_model)
    U = initial_upper(c)
    out = deflate_update(fig1_model, c, U, V_FIG1)
    assert out[0] == 0.5 and out[1] == 0.5


def test_deflate_fixpoint_fig1(fig1_model):
    c = classify_states(fig1_model)
    assert np.array_equal(deflate_update(fig1_model, c, V_FIG1, V_FIG1), V_FIG1)


def test_deflate_ec_free_equals_bellman():
    m = tvi_chain(5)
    c = classify_states(m)
    rng = np.random.default_rng(0)
    for _ in range(20):
        U = rng.random(m.n)
        U[5], U[6] = 1.0, 0.0
        L = U * rng.random(m.n)
        assert np.array_equal(deflate_update(m, c, U, L), bellman_update(m, c, U))


def test_initial_bounds(fig1_model):
    c = classify_states(fig1_model)
    assert initial_lower(fig1_model).tolist() == [0, 0, 1, 0]
    assert initial_upper(c).tolist() == [1, 1, 1, 0]


def test_diff_plus_array_matches_scalar():
    x = np.array([0.0, 0.5, 0.9999999, 0.3])
    out = diff_plus_array(x, 1e-6, DiffMode.ABSOLUTE)
    assert out.tolist() == [diff_plus(v, 1e-6) for v in x]


# -- properties against the enumeration oracle ----------------------------------


def _fits(model):
    return strategy_count(model) <= 4096


@settings(max_examples=120, deadline=None)
@given(small_games(), st.data())
def test_value_bounds_are_preserved(model, data):
    """L <= V <= U is kept by B on L and by B^D_L on U."""
    if not _fits(model):
        return
    V = brute_force_value(model)
    c = classify_states(model)
    gap_l = np.array(data.draw(st.lists(st.floats(0, 1), min_size=model.n, max_size=model.n)))
    gap_u = np.array(data.draw(st.lists(st.floats(0, 1), min_size=model.n, max_size=model.n)))
    L = V * gap_l
    L[list(c.goals)] = 1.0
    U = np.minimum(1.0, V + gap_u * (1 - V))
    U[list(c.sinks)] = 0.0
    U[list(c.goals)] = 1.0
    L[list(c.sinks)] = 0.0
    assert np.all(bellman_update(model, c, L) <= V + 1e-9)
    assert np.all(deflate_update(model, c, U, L) >= V - 1e-9)


@settings(max_examples=120, deadline=None)
@given(small_games(), st.data())
def test_value_is_fixpoint_of_both_operators(model, data):
    if not _fits(model):
        return
    V = brute_force_value(model)
    c = classify_states(model)
    assert np.allclose(bellman_update(model, c, V), V, atol=1e-9)
    assert np.allclose(deflate_update(model, c, V, V), V, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(small_games(max_states=7), st.data())
def test_deflate_monotone(model, data):
    n = model.n
    c = classify_states(model)
    f1 = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    bump = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    L = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    f2 = np.minimum(1.0, f1 + bump)
    gs = data.draw(st.booleans())
    assert np.all(deflate_update(model, c, f1, L, gs) <= deflate_update(model, c, f2, L, gs))

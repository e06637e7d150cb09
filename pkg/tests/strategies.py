"""Hypothesis strategies for small games with arbitrary structure."""

from __future__ import annotations

from hypothesis import strategies as st

from ssgvi.model import Distribution, Player, SsgModel


@st.composite
def small_games(draw, max_states: int = 6, max_actions: int = 3, max_support: int = 3) -> SsgModel:
    n = draw(st.integers(2, max_states))
    goals = draw(st.sets(st.integers(0, n - 1), min_size=0, max_size=2))
    owner = [draw(st.sampled_from([Player.MAX, Player.MIN])) for _ in range(n)]
    rows = []
    for s in range(n):
        if s in goals:
            rows.append([])
            continue
        acts = []
        for a in range(draw(st.integers(1, max_actions))):
            targets = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=max_support, unique=True))
            weights = [draw(st.integers(1, 9)) for _ in targets]
            total = sum(weights)
            acts.append((f"a{a}", Distribution.from_pairs((t, w / total) for t, w in zip(targets, weights))))
        rows.append(acts)
    return SsgModel.build(n, owner, rows, 0, goals)


def value_functions(n: int, lo: float = 0.0, hi: float = 1.0):
    return st.lists(st.floats(lo, hi, allow_nan=False), min_size=n, max_size=n)

"""Simple stochastic game data model.

A game is an immutable :class:`SsgModel`.  States are integers ``0..n-1``,
each owned by the Maximizer or the Minimizer, each with a non-empty list of
actions.  An action is identified positionally by ``(state, index)``; its
label is informational only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

#: Tolerance under which a distribution's total is considered to be one.  Such
#: distributions get their final entry replaced by the exact complement.
SUM_TOLERANCE = 1e-9


class UsageError(ValueError):
    """Raised when an operation is called with arguments outside its contract."""


class Player(enum.IntEnum):
    MAX = 0
    MIN = 1


@dataclass(frozen=True)
class Distribution:
    """Finite distribution over successor states, kept in insertion order."""

    targets: tuple[int, ...]
    probs: tuple[float, ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "Distribution":
        """Build a distribution; if it sums to one within tolerance, the last
        entry is set to the complement of the running sum of the others."""
        pairs = [(int(t), float(p)) for t, p in pairs]
        targets = tuple(t for t, _ in pairs)
        probs = [p for _, p in pairs]
        if probs and abs(sum(probs) - 1.0) <= SUM_TOLERANCE:
            head = 0.0
            for p in probs[:-1]:
                head += p
            probs[-1] = 1.0 - head
        return cls(targets, tuple(probs))

    @classmethod
    def dirac(cls, target: int) -> "Distribution":
        return cls((int(target),), (1.0,))

    def __len__(self) -> int:
        return len(self.targets)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.targets, self.probs))

    def support(self) -> frozenset[int]:
        return frozenset(t for t, p in self if p > 0.0)

    def total(self) -> float:
        acc = 0.0
        for p in self.probs:
            acc += p
        return acc


class Action(NamedTuple):
    label: str
    dist: Distribution


@dataclass
class ModelArrays:
    """CSR-style numeric view of a model used by the iteration kernels.

    ``state_ptr[s]:state_ptr[s+1]`` are the global action ids of state ``s``;
    ``action_ptr[a]:action_ptr[a+1]`` are the transitions of action ``a``.
    """

    state_ptr: np.ndarray
    action_ptr: np.ndarray
    targets: np.ndarray
    probs: np.ndarray
    is_max: np.ndarray
    action_state: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_actions(self) -> int:
        return len(self.action_ptr) - 1


@dataclass(frozen=True)
class SsgModel:
    """Turn-based two-player stochastic game with a reachability objective.

    Constructing the dataclass directly stores the data verbatim, which lets
    :func:`validate_model` report broken inputs.  Use :meth:`build` for the
    normal path: it coerces types and makes every goal state absorbing.
    """

    n: int
    owner: tuple[Player, ...]
    actions: tuple[tuple[Action, ...], ...]
    initial: int
    goals: frozenset[int]

    @classmethod
    def build(
        cls,
        n: int,
        owner: Sequence[Player | int],
        actions: Sequence[Sequence[Action | tuple[str, Distribution]]],
        initial: int,
        goals: Iterable[int],
    ) -> "SsgModel":
        goals = frozenset(int(g) for g in goals)
        rows = []
        for s in range(n):
            if s in goals:
                rows.append((Action("goal", Distribution.dirac(s)),))
            else:
                rows.append(tuple(Action(str(lbl), d) for lbl, d in actions[s]))
        return cls(
            n=int(n),
            owner=tuple(Player(int(o)) for o in owner),
            actions=tuple(rows),
            initial=int(initial),
            goals=goals,
        )

    def num_actions(self, s: int) -> int:
        return len(self.actions[s])

    def is_max(self, s: int) -> bool:
        return self.owner[s] == Player.MAX

    def states_of(self, player: Player) -> list[int]:
        return [s for s in range(self.n) if self.owner[s] == player]

    @cached_property
    def arrays(self) -> ModelArrays:
        counts = [len(acts) for acts in self.actions]
        state_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=state_ptr[1:])
        lens = [len(a.dist) for acts in self.actions for a in acts]
        action_ptr = np.zeros(len(lens) + 1, dtype=np.int64)
        np.cumsum(lens, out=action_ptr[1:])
        targets = np.fromiter(
            (t for acts in self.actions for a in acts for t in a.dist.targets),
            dtype=np.int64,
            count=int(action_ptr[-1]),
        )
        probs = np.fromiter(
            (p for acts in self.actions for a in acts for p in a.dist.probs),
            dtype=np.float64,
            count=int(action_ptr[-1]),
        )
        is_max = np.array([o == Player.MAX for o in self.owner], dtype=np.uint8)
        action_state = np.repeat(np.arange(self.n, dtype=np.int64), counts)
        return ModelArrays(state_ptr, action_ptr, targets, probs, is_max, action_state)


# -- strategies and induced chains -------------------------------------------


@dataclass(frozen=True)
class MinStrategy:
    """Deterministic Minimizer strategy: state -> action index."""

    choice: Mapping[int, int]


@dataclass(frozen=True)
class MaxStrategy:
    """Randomised Maximizer strategy, uniform over a non-empty action set."""

    support: Mapping[int, frozenset[int]]

    def prob(self, s: int, a: int) -> float:
        sup = self.support[s]
        return 1.0 / len(sup) if a in sup else 0.0


@dataclass(frozen=True)
class MarkovChain:
    n: int
    rows: tuple[Distribution, ...]
    goals: frozenset[int]


# -- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.violations)


def validate_model(model: SsgModel) -> ValidationReport:
    v: list[str] = []
    n = model.n
    if n < 1:
        v.append("model has no states")
    if len(model.owner) != n:
        v.append(f"owner list has {len(model.owner)} entries for {n} states")
    if len(model.actions) != n:
        v.append(f"action table has {len(model.actions)} rows for {n} states")
    if not 0 <= model.initial < n:
        v.append(f"initial state {model.initial} out of range")
    for g in sorted(model.goals):
        if not 0 <= g < n:
            v.append(f"goal state {g} out of range")
    for s, acts in enumerate(model.actions[:n]):
        if not acts:
            v.append(f"blocking state {s}: no actions")
        for i, act in enumerate(acts):
            where = f"state {s} action {i} ({act.label})"
            d = act.dist
            if len(d.targets) != len(d.probs):
                v.append(f"{where}: malformed distribution")
                continue
            if not d.targets:
                v.append(f"{where}: empty distribution")
                continue
            if len(set(d.targets)) != len(d.targets):
                v.append(f"{where}: duplicate targets")
            for t, p in d:
                if not 0 <= t < n:
                    v.append(f"{where}: target {t} out of range")
                if not (p > 0.0 and p <= 1.0):
                    v.append(f"{where}: probability {p!r} for target {t} not in (0,1]")
            total = d.total()
            if abs(total - 1.0) > SUM_TOLERANCE:
                v.append(f"{where}: distribution sum {total!r} != 1")
        if s in model.goals:
            absorbing = all(a.dist.support() == {s} for a in acts)
            if not absorbing:
                v.append(f"goal state {s} is not absorbing")
    return ValidationReport(v)


def post(model: SsgModel, s: int, a: int) -> frozenset[int]:
    """Successor states of action ``a`` in state ``s`` with positive probability."""
    if not 0 <= s < model.n:
        raise UsageError(f"state {s} out of range")
    if not 0 <= a < len(model.actions[s]):
        raise UsageError(f"state {s} has no action {a}")
    return model.actions[s][a].dist.support()


def _mixture(dists: Sequence[Distribution]) -> Distribution:
    w = 1.0 / len(dists)
    merged: dict[int, float] = {}
    for d in dists:
        for t, p in d:
            merged[t] = merged.get(t, 0.0) + w * p
    return Distribution.from_pairs(merged.items())


def induced_markov_chain(
    model: SsgModel, sigma: MaxStrategy, tau: MinStrategy
) -> MarkovChain:
    rows = []
    for s in range(model.n):
        acts = model.actions[s]
        if model.owner[s] == Player.MAX:
            if s not in sigma.support:
                raise UsageError(f"Maximizer strategy has no entry for state {s}")
            chosen = sorted(sigma.support[s])
            if not chosen or any(not 0 <= a < len(acts) for a in chosen):
                raise UsageError(f"invalid Maximizer support at state {s}: {chosen}")
            if len(chosen) == 1:
                rows.append(acts[chosen[0]].dist)
            else:
                rows.append(_mixture([acts[a].dist for a in chosen]))
        else:
            if s not in tau.choice:
                raise UsageError(f"Minimizer strategy has no entry for state {s}")
            a = tau.choice[s]
            if not 0 <= a < len(acts):
                raise UsageError(f"invalid Minimizer choice at state {s}: {a}")
            rows.append(acts[a].dist)
    return MarkovChain(model.n, tuple(rows), model.goals)

"""Bellman operator, deflating operator and difference functions.

Value functions are float64 arrays of length ``model.n``.  The operators here
return fresh arrays; the solvers use the in-place :class:`Sweep` and
:class:`Deflator` helpers to avoid allocation in the hot loop.
"""

from __future__ import annotations

import enum
from typing import Iterable

import numpy as np

from ssgvi import kernels
from ssgvi.graph import EcCandidate, StateClasses, classify_states, find_sec_candidates, mec_decomposition
from ssgvi.model import SsgModel


class DiffMode(str, enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


def diff(old: float, new: float, mode: DiffMode = DiffMode.ABSOLUTE) -> float:
    if DiffMode(mode) is DiffMode.ABSOLUTE:
        return new - old
    if new == old:
        return 0.0
    return (new - old) / new


def diff_plus(x: float, eps: float, mode: DiffMode = DiffMode.ABSOLUTE) -> float:
    """Optimistic upper guess for a lower value ``x``, capped at 1."""
    return float(diff_plus_array(np.array([x], dtype=np.float64), eps, mode)[0])


def diff_array(old: np.ndarray, new: np.ndarray, mode: DiffMode) -> np.ndarray:
    if DiffMode(mode) is DiffMode.ABSOLUTE:
        return new - old
    d = new - old
    out = np.zeros_like(d)
    nz = d != 0.0
    with np.errstate(divide="ignore"):
        out[nz] = d[nz] / new[nz]
    return out


def diff_plus_array(x: np.ndarray, eps: float, mode: DiffMode) -> np.ndarray:
    mode = DiffMode(mode)
    if mode is DiffMode.ABSOLUTE:
        up = np.minimum(1.0, x + eps)
    else:
        up = np.minimum(1.0, x * (1.0 + eps))
    # rounding may push the gap just above eps
    for _ in range(4):
        over = diff_array(x, up, mode) > eps
        if not over.any():
            break
        up[over] = np.nextafter(up[over], -np.inf)
    return np.where(x == 0.0, 0.0, up)


def initial_lower(model: SsgModel) -> np.ndarray:
    f = np.zeros(model.n)
    f[list(model.goals)] = 1.0
    return f


def initial_upper(classes: StateClasses) -> np.ndarray:
    f = np.ones(classes.n)
    f[list(classes.sinks)] = 0.0
    return f


class Sweep:
    """Bellman backup restricted to a fixed set of states; other entries of the
    value vector are left untouched."""

    def __init__(self, model: SsgModel, states: Iterable[int] | np.ndarray):
        self.arrays = model.arrays
        if not isinstance(states, np.ndarray):
            states = list(states)
        self.states = np.unique(np.asarray(states, dtype=np.int64))
        acts = self.arrays.state_ptr[self.states + 1] - self.arrays.state_ptr[self.states]
        self.actions_per_sweep = int(acts.sum())

    def __len__(self) -> int:
        return len(self.states)

    def synchronous(self, src: np.ndarray, dst: np.ndarray) -> None:
        a = self.arrays
        kernels.backup(a.state_ptr, a.action_ptr, a.targets, a.probs, a.is_max, self.states, src, dst)

    def in_place(self, f: np.ndarray) -> None:
        a = self.arrays
        kernels.backup(a.state_ptr, a.action_ptr, a.targets, a.probs, a.is_max, self.states, f, f)


def bellman_update(
    model: SsgModel, classes: StateClasses, f: np.ndarray, gauss_seidel: bool = False
) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    out = f.copy()
    out[list(classes.goals)] = 1.0
    out[list(classes.sinks)] = 0.0
    sweep = Sweep(model, sorted(classes.unknown))
    if gauss_seidel:
        sweep.in_place(out)
    else:
        sweep.synchronous(f, out)
    return out


class Deflator:
    """Precomputed deflation for a fixed list of end-component candidates.

    :meth:`apply` lowers every candidate state to its candidate's best exit
    under the given vector, in place.
    """

    def __init__(self, model: SsgModel, candidates: list[EcCandidate]):
        self.candidates = candidates
        arr = model.arrays
        n = model.n
        label = np.full(n, -1, dtype=np.int64)
        for i, ec in enumerate(candidates):
            label[list(ec.states)] = i
        self.states = np.flatnonzero(label >= 0).astype(np.int64)
        self.state_label = label[self.states]
        lens = np.diff(arr.action_ptr)
        t_action = np.repeat(np.arange(arr.num_actions, dtype=np.int64), lens)
        a_label = label[arr.action_state]
        leaves = np.zeros(arr.num_actions, dtype=bool)
        out_t = label[arr.targets] != a_label[t_action]
        leaves[t_action[out_t]] = True
        exits = leaves & (a_label >= 0) & arr.is_max[arr.action_state].astype(bool)
        self.exit_actions = np.flatnonzero(exits).astype(np.int64)
        self.exit_label = a_label[self.exit_actions]
        self._q = np.empty(len(self.exit_actions))
        self._arr = arr

    def __bool__(self) -> bool:
        return len(self.states) > 0

    def best_exits(self, f: np.ndarray) -> np.ndarray:
        best = np.zeros(len(self.candidates))
        if len(self.exit_actions):
            a = self._arr
            kernels.action_values(a.action_ptr, a.targets, a.probs, self.exit_actions, f, self._q)
            np.maximum.at(best, self.exit_label, self._q)
        return best

    def apply(self, f: np.ndarray) -> None:
        if not len(self.states):
            return
        best = self.best_exits(f)
        f[self.states] = np.minimum(f[self.states], best[self.state_label])


def ec_region(model: SsgModel, classes: StateClasses, states: Iterable[int] | None = None) -> frozenset[int]:
    """Unknown states lying in some end component; deflating only ever touches these."""
    region = classes.unknown if states is None else classes.unknown & frozenset(states)
    if not region:
        return frozenset()
    return frozenset(s for ec in mec_decomposition(model, region) for s in ec.states)


def make_deflator(
    model: SsgModel, classes: StateClasses, lower: np.ndarray, region: frozenset[int] | None = None
) -> Deflator:
    if region is not None and not region:
        return Deflator(model, [])
    return Deflator(model, find_sec_candidates(model, lower, classes, region))


def deflate_update(
    model: SsgModel,
    classes: StateClasses,
    U: np.ndarray,
    L: np.ndarray,
    gauss_seidel: bool = False,
) -> np.ndarray:
    """One application of the deflating operator: a Bellman update of ``U``,
    then every candidate guessed from ``L`` is capped at its best exit."""
    out = bellman_update(model, classes, U, gauss_seidel)
    make_deflator(model, classes, np.asarray(L, dtype=np.float64)).apply(out)
    return out


__all__ = [
    "DiffMode",
    "diff",
    "diff_plus",
    "diff_array",
    "diff_plus_array",
    "initial_lower",
    "initial_upper",
    "Sweep",
    "bellman_update",
    "Deflator",
    "ec_region",
    "make_deflator",
    "deflate_update",
    "classify_states",
]

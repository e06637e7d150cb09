"""Graph analysis on the support graph of a game.

State classification (goal / sink / unknown), strongly connected components
in topological order, maximal end components and the end-component
candidates used for deflating.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ssgvi import kernels
from ssgvi.model import Player, SsgModel


@dataclass(frozen=True)
class StateClasses:
    goals: frozenset[int]
    sinks: frozenset[int]
    unknown: frozenset[int]

    @property
    def n(self) -> int:
        return len(self.goals) + len(self.sinks) + len(self.unknown)

    def unknown_array(self) -> np.ndarray:
        return np.array(sorted(self.unknown), dtype=np.int64)


@dataclass(frozen=True)
class EcCandidate:
    """End component: a state set with the witness actions that stay inside."""

    states: frozenset[int]
    actions: Mapping[int, frozenset[int]]


@dataclass(frozen=True)
class SccDecomposition:
    """Components listed in topological order, so ``rank`` grows towards the
    bottom components.  Use :meth:`bottom_up` for solving order."""

    components: tuple[frozenset[int], ...]
    rank: np.ndarray

    @property
    def topo_rank(self) -> dict[int, int]:
        return {s: int(r) for s, r in enumerate(self.rank)}

    def bottom_up(self) -> Iterator[frozenset[int]]:
        return reversed(self.components)


def support_graph(model: SsgModel) -> csr_matrix:
    """n x n adjacency matrix with an entry for every positive transition."""
    arr = model.arrays
    key = "support_graph"
    if key not in arr.cache:
        src = np.repeat(arr.action_state, np.diff(arr.action_ptr))
        keep = arr.probs > 0.0
        g = csr_matrix(
            (np.ones(int(keep.sum()), dtype=np.int8), (src[keep], arr.targets[keep])),
            shape=(model.n, model.n),
        )
        g.sum_duplicates()
        g.data[:] = 1
        arr.cache[key] = g
    return arr.cache[key]


def _backward_reachable(pred: csr_matrix, sources: Iterable[int]) -> np.ndarray:
    """Mask of states with a path into ``sources``; ``pred`` is the transposed graph."""
    seen = np.zeros(pred.shape[0], dtype=bool)
    queue = deque()
    for s in sources:
        if not seen[s]:
            seen[s] = True
            queue.append(s)
    indptr, indices = pred.indptr, pred.indices
    while queue:
        v = queue.popleft()
        for u in indices[indptr[v] : indptr[v + 1]]:
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return seen


def classify_states(model: SsgModel) -> StateClasses:
    pred = support_graph(model).T.tocsr()
    reach = _backward_reachable(pred, model.goals)
    goals = frozenset(model.goals)
    sinks = frozenset(int(s) for s in np.flatnonzero(~reach))
    unknown = frozenset(int(s) for s in np.flatnonzero(reach) if s not in goals)
    return StateClasses(goals, sinks, unknown)


def tarjan(indptr: Sequence[int], indices: Sequence[int], n: int) -> list[list[int]]:
    """Strongly connected components of a CSR graph, bottom components first.

    Iterative version of Tarjan's algorithm; the emission order is a reverse
    topological order of the condensation.
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, indptr[root])]
        while work:
            v, i = work[-1]
            end = indptr[v + 1]
            while i < end:
                w = indices[i]
                i += 1
                if index[w] == -1:
                    work[-1] = (v, i)
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, indptr[w]))
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
    return out


def scc_decomposition(model: SsgModel) -> SccDecomposition:
    g = support_graph(model)
    bottom_first = tarjan(g.indptr.tolist(), g.indices.tolist(), model.n)
    comps = tuple(frozenset(c) for c in reversed(bottom_first))
    rank = np.empty(model.n, dtype=np.int64)
    for r, comp in enumerate(comps):
        for s in comp:
            rank[s] = r
    return SccDecomposition(comps, rank)


def _mecs(model: SsgModel, alive_actions: np.ndarray, alive_states: np.ndarray) -> list[EcCandidate]:
    """Iterative SCC refinement restricted to the given state/action masks."""
    arr = model.arrays
    n = model.n
    lens = np.diff(arr.action_ptr)
    t_action = np.repeat(np.arange(arr.num_actions, dtype=np.int64), lens)
    t_src = arr.action_state[t_action]
    alive_actions = alive_actions & alive_states[arr.action_state]
    alive_states = alive_states.copy()
    while True:
        # an action dies if any successor is dead or outside its SCC
        dead_t = alive_actions[t_action] & ~alive_states[arr.targets]
        alive_actions[t_action[dead_t]] = False
        live_t = alive_actions[t_action]
        g = csr_matrix(
            (np.ones(int(live_t.sum()), dtype=np.int8), (t_src[live_t], arr.targets[live_t])),
            shape=(n, n),
        )
        _, labels = connected_components(g, directed=True, connection="strong")
        cross = live_t & (labels[t_src] != labels[arr.targets])
        alive_actions[t_action[cross]] = False
        has_action = np.zeros(n, dtype=bool)
        has_action[arr.action_state[alive_actions]] = True
        new_states = alive_states & has_action
        if not dead_t.any() and not cross.any() and np.array_equal(new_states, alive_states):
            break
        alive_states = new_states
    groups: dict[int, list[int]] = {}
    for s in np.flatnonzero(alive_states):
        groups.setdefault(int(labels[s]), []).append(int(s))
    state_ptr = arr.state_ptr
    out = []
    for members in groups.values():
        acts = {}
        for s in members:
            base = int(state_ptr[s])
            local = np.flatnonzero(alive_actions[base : int(state_ptr[s + 1])])
            acts[s] = frozenset(int(a) for a in local)
        out.append(EcCandidate(frozenset(members), acts))
    out.sort(key=lambda ec: min(ec.states))
    return out


def mec_decomposition(model: SsgModel, states: Iterable[int] | None = None) -> list[EcCandidate]:
    """Maximal end components, optionally only those inside ``states``."""
    alive_states = np.zeros(model.n, dtype=bool)
    if states is None:
        alive_states[:] = True
    else:
        alive_states[list(states)] = True
    alive_actions = np.ones(model.arrays.num_actions, dtype=bool)
    return _mecs(model, alive_actions, alive_states)


def min_optimal_actions(model: SsgModel, values: np.ndarray) -> np.ndarray:
    """Mask of actions kept in the restricted game for a value vector:
    Minimizer states keep their exact argmin actions, Maximizer states keep all."""
    arr = model.arrays
    q = np.empty(arr.num_actions)
    kernels.all_action_values(arr.action_ptr, arr.targets, arr.probs, values, q)
    lo = np.minimum.reduceat(q, arr.state_ptr[:-1])
    keep = q == lo[arr.action_state]
    keep |= arr.is_max[arr.action_state].astype(bool)
    return keep


def find_sec_candidates(
    model: SsgModel,
    lower: np.ndarray,
    classes: StateClasses | None = None,
    region: Iterable[int] | None = None,
) -> list[EcCandidate]:
    """Guess the simple end components from a lower bound.

    MECs of the game in which every Minimizer state may only use actions that
    are optimal for it according to ``lower``.  Only unknown states are
    considered; ``region`` narrows the search further.
    """
    if classes is None:
        classes = classify_states(model)
    alive = np.zeros(model.n, dtype=bool)
    alive[list(classes.unknown)] = True
    if region is not None:
        mask = np.zeros(model.n, dtype=bool)
        mask[list(region)] = True
        alive &= mask
    if not alive.any():
        return []
    keep = min_optimal_actions(model, np.asarray(lower, dtype=np.float64))
    return _mecs(model, keep, alive)


def exiting_max_actions(model: SsgModel, states: frozenset[int]) -> list[int]:
    """Global ids of Maximizer actions in ``states`` with a successor outside."""
    arr = model.arrays
    out = []
    for s in sorted(states):
        if model.owner[s] != Player.MAX:
            continue
        for a in range(int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])):
            lo, hi = int(arr.action_ptr[a]), int(arr.action_ptr[a + 1])
            if any(int(t) not in states for t in arr.targets[lo:hi]):
                out.append(a)
    return out


def best_exit(model: SsgModel, states: Iterable[int], f: Sequence[float]) -> float:
    """Best value a Maximizer action leaving ``states`` achieves under ``f``
    (zero when there is no such action)."""
    states = frozenset(states)
    if not states:
        raise ValueError("best_exit needs a non-empty state set")
    best = 0.0
    for s in states:
        if model.owner[s] != Player.MAX:
            continue
        for act in model.actions[s]:
            if act.dist.support() <= states:
                continue
            acc = 0.0
            for t, p in act.dist:
                acc = acc + p * f[t]
            best = max(best, acc)
    return best

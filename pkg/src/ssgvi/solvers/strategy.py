"""Strategy extraction, the local optimality check and strategy iteration.

Strategy iteration improves the Maximizer strategy against exact Minimizer
best responses.  A best response is computed by policy iteration on the
induced MDP after removing the states where the responding player can force
value zero; on the remaining states every policy of the Minimizer reaches a
positive exit, so strict-improvement policy iteration ends at the value.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ssgvi import kernels
from ssgvi.bellman import initial_lower, initial_upper
from ssgvi.graph import StateClasses, classify_states
from ssgvi.model import MaxStrategy, MinStrategy, SsgModel
from ssgvi.solvers.common import VALUE_TOL, Budget, BudgetExhausted, SolverConfig, SolverResult, Status
from ssgvi.solvers.markov import solve_rows

EXISTS = 0
FORALL = 1


def q_values(model: SsgModel, f: np.ndarray) -> np.ndarray:
    arr = model.arrays
    q = np.empty(arr.num_actions)
    kernels.all_action_values(arr.action_ptr, arr.targets, arr.probs, np.asarray(f, dtype=np.float64), q)
    return q


def _reverse_index(model: SsgModel) -> tuple[list[int], list[int]]:
    """For each state, the global ids of actions having it as a target."""
    arr = model.arrays
    key = "reverse_index"
    if key not in arr.cache:
        lens = np.diff(arr.action_ptr)
        t_action = np.repeat(np.arange(arr.num_actions, dtype=np.int64), lens)
        order = np.argsort(arr.targets, kind="stable")
        ptr = np.zeros(model.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(arr.targets, minlength=model.n), out=ptr[1:])
        arr.cache[key] = (ptr.tolist(), t_action[order].tolist())
    return arr.cache[key]


def positive_attractor(
    model: SsgModel,
    states: np.ndarray,
    seeds: np.ndarray,
    quantifier: np.ndarray,
    allowed: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """States of ``states`` from which ``seeds`` is reached with positive
    probability.

    A state with quantifier EXISTS joins once one of its allowed actions can
    hit the set, a FORALL state once all of its allowed actions can.  Returns
    the membership mask over all states and, per state, the action that made
    it join (-1 if none).
    """
    arr = model.arrays
    n = model.n
    if allowed is None:
        allowed = np.ones(arr.num_actions, dtype=bool)
    rptr, ract = _reverse_index(model)
    in_scope = np.zeros(n, dtype=bool)
    in_scope[states] = True
    n_allowed = np.bincount(arr.action_state[allowed], minlength=n)
    need = np.where(quantifier == FORALL, n_allowed, 1).tolist()
    member = seeds.copy()
    member[states] = False
    via = [-1] * n
    count = [0] * n
    hit = [False] * arr.num_actions
    scope = in_scope.tolist()
    allowed_l = allowed.tolist()
    owner = arr.action_state.tolist()
    mem = member.tolist()
    queue = [int(s) for s in np.flatnonzero(member)]
    head = 0
    while head < len(queue):
        t = queue[head]
        head += 1
        for a in ract[rptr[t] : rptr[t + 1]]:
            if hit[a] or not allowed_l[a]:
                continue
            s = owner[a]
            if not scope[s] or mem[s]:
                continue
            hit[a] = True
            count[s] += 1
            if count[s] >= need[s]:
                mem[s] = True
                via[s] = a
                queue.append(s)
    return np.array(mem, dtype=bool), np.array(via, dtype=np.int64)


def _rows(model: SsgModel, acts: np.ndarray, rows: np.ndarray, weights: np.ndarray):
    """Coordinate entries of a chain whose row ``rows[i]`` mixes action
    ``acts[i]`` with weight ``weights[i]``."""
    arr = model.arrays
    starts = arr.action_ptr[acts]
    lens = arr.action_ptr[acts + 1] - starts
    total = int(lens.sum())
    offs = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(lens) - lens, lens)
    k = np.repeat(starts, lens) + offs
    return np.repeat(rows, lens), arr.targets[k], arr.probs[k] * np.repeat(weights, lens)


def evaluate_choice(model: SsgModel, states: np.ndarray, choice: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Exact values of ``states`` when each plays the global action ``choice[s]``."""
    acts = choice[states]
    e_row, e_tgt, e_prob = _rows(model, acts, np.arange(len(states), dtype=np.int64), np.ones(len(states)))
    return solve_rows(f, states, e_row, e_tgt, e_prob)


def _greedy(model: SsgModel, states: np.ndarray, q: np.ndarray, current: np.ndarray, maximize: bool) -> int:
    """Switch ``current`` in place where an action is better by more than the
    tolerance; returns the number of switches."""
    arr = model.arrays
    switched = 0
    for s in states.tolist():
        lo, hi = int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])
        block = q[lo:hi]
        cur = q[current[s]]
        if maximize:
            j = int(np.argmax(block))
            if block[j] > cur + VALUE_TOL:
                current[s] = lo + j
                switched += 1
        else:
            j = int(np.argmin(block))
            if block[j] < cur - VALUE_TOL:
                current[s] = lo + j
                switched += 1
    return switched


def _split(model: SsgModel, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    is_max = model.arrays.is_max[states].astype(bool)
    return states[is_max], states[~is_max]


def best_response(
    model: SsgModel,
    states: np.ndarray,
    f: np.ndarray,
    choice: np.ndarray,
    player_max: bool,
    budget: Budget | None = None,
) -> np.ndarray:
    """Optimal response of one player while the other plays ``choice``.

    ``choice`` holds a global action id per state; entries of the responding
    player are the starting policy and are updated in place.  Returns the
    value vector (a copy of ``f`` with ``states`` filled in).
    """
    arr = model.arrays
    maxs, mins = _split(model, states)
    mine = maxs if player_max else mins
    fixed = np.zeros(arr.num_actions, dtype=bool)
    fixed[choice[mins if player_max else maxs]] = True
    own = np.zeros(model.n, dtype=bool)
    own[mine] = True
    allowed = own[arr.action_state] | fixed
    quant = np.full(model.n, EXISTS, dtype=np.int8)
    if not player_max:
        quant[mine] = FORALL
    outside = np.ones(model.n, dtype=bool)
    outside[states] = False
    member, via = positive_attractor(model, states, outside & (f > 0.0), quant, allowed)
    live = states[member[states]]
    live_own = live[arr.is_max[live].astype(bool) == player_max]
    if player_max:
        # start from the attractor policy so every live state reaches a positive exit
        choice[live_own] = via[live_own]
    else:
        # the Minimizer keeps an avoiding action where it can force zero
        for s in mine[~member[mine]].tolist():
            for a in range(int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])):
                tg = arr.targets[arr.action_ptr[a] : arr.action_ptr[a + 1]]
                if not member[tg].any():
                    choice[s] = a
                    break
    base = f.copy()
    base[states] = 0.0
    while True:
        if budget is not None:
            budget.check_time()
        v = evaluate_choice(model, live, choice, base)
        q = q_values(model, v)
        if not _greedy(model, live_own, q, choice, player_max):
            return v


def max_strategy_choice(model: SsgModel, states: np.ndarray, tau: MinStrategy | None) -> np.ndarray:
    choice = model.arrays.state_ptr[:-1].copy()
    if tau is not None:
        for s, a in tau.choice.items():
            choice[s] = model.arrays.state_ptr[s] + a
    return choice


def si_states(
    model: SsgModel,
    states: np.ndarray,
    f: np.ndarray,
    tau: MinStrategy | None = None,
    budget: Budget | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Strategy iteration on ``states`` with the other entries of ``f`` fixed.

    The Maximizer starts from its best response to ``tau`` (or from the
    positive attractor strategy) and switches on strict improvement against
    the Minimizer's exact best response.  Returns values, the final global
    action choice per state, and the number of rounds.
    """
    states = np.asarray(states, dtype=np.int64)
    choice = max_strategy_choice(model, states, tau)
    maxs, mins = _split(model, states)
    if tau is not None:
        best_response(model, states, f, choice, player_max=True, budget=budget)
    else:
        quant = np.where(model.arrays.is_max.astype(bool), EXISTS, FORALL).astype(np.int8)
        outside = np.ones(model.n, dtype=bool)
        outside[states] = False
        member, via = positive_attractor(model, states, outside & (f > 0.0), quant)
        live = maxs[member[maxs]]
        choice[live] = via[live]
    rounds = 0
    while True:
        rounds += 1
        v = best_response(model, states, f, choice, player_max=False, budget=budget)
        q = q_values(model, v)
        if not _greedy(model, maxs, q, choice, maximize=True):
            return v, choice, rounds


def extract_strategies(
    model: SsgModel,
    classes: StateClasses | None,
    L: np.ndarray,
    U: np.ndarray,
    states: Iterable[int] | None = None,
) -> tuple[MaxStrategy, MinStrategy]:
    """Maximizer plays every L-optimal action uniformly; Minimizer plays the
    lowest-index U-optimal action."""
    arr = model.arrays
    qL = q_values(model, L)
    qU = q_values(model, U)
    support: dict[int, frozenset[int]] = {}
    choice: dict[int, int] = {}
    for s in range(model.n) if states is None else states:
        lo, hi = int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])
        if arr.is_max[s]:
            block = qL[lo:hi]
            support[s] = frozenset(int(a) for a in np.flatnonzero(block == block.max()))
        else:
            choice[s] = int(np.argmin(qU[lo:hi]))
    return MaxStrategy(support), MinStrategy(choice)


def local_optimality_check(
    model: SsgModel, sigma: MaxStrategy, tau: MinStrategy, V_mc: np.ndarray
) -> bool:
    arr = model.arrays
    q = q_values(model, V_mc)
    for s, sup in sigma.support.items():
        lo, hi = int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])
        best = q[lo:hi].max()
        if any(q[lo + a] < best - VALUE_TOL for a in sup):
            return False
    for s, a in tau.choice.items():
        lo, hi = int(arr.state_ptr[s]), int(arr.state_ptr[s + 1])
        if q[lo + a] > q[lo:hi].min() + VALUE_TOL:
            return False
    return True


def chain_values(
    model: SsgModel, states: np.ndarray, sigma: MaxStrategy, tau: MinStrategy, f: np.ndarray
) -> np.ndarray:
    """Exact values of ``states`` in the chain induced by the strategies."""
    arr = model.arrays
    acts, rows, weights = [], [], []
    for i, s in enumerate(states.tolist()):
        base = int(arr.state_ptr[s])
        if arr.is_max[s]:
            sup = sorted(sigma.support[s])
            for a in sup:
                acts.append(base + a)
                rows.append(i)
                weights.append(1.0 / len(sup))
        else:
            acts.append(base + tau.choice[s])
            rows.append(i)
            weights.append(1.0)
    e_row, e_tgt, e_prob = _rows(
        model, np.array(acts, dtype=np.int64), np.array(rows, dtype=np.int64), np.array(weights)
    )
    return solve_rows(f, states, e_row, e_tgt, e_prob)


def min_zero_guard(
    model: SsgModel, states: np.ndarray, sigma: MaxStrategy, V_mc: np.ndarray, f: np.ndarray
) -> bool:
    """True when V_mc vanishes wherever the Minimizer can force zero against
    ``sigma``.  Local Minimizer optimality only proves optimality together
    with this condition."""
    arr = model.arrays
    allowed = np.zeros(arr.num_actions, dtype=bool)
    mins = states[~arr.is_max[states].astype(bool)]
    for s in mins.tolist():
        allowed[int(arr.state_ptr[s]) : int(arr.state_ptr[s + 1])] = True
    for s, sup in sigma.support.items():
        for a in sup:
            allowed[int(arr.state_ptr[s]) + a] = True
    quant = np.where(arr.is_max.astype(bool), EXISTS, FORALL).astype(np.int8)
    outside = np.ones(model.n, dtype=bool)
    outside[states] = False
    member, _ = positive_attractor(model, states, outside & (f > 0.0), quant, allowed)
    dead = states[~member[states]]
    return bool(np.all(V_mc[dead] <= VALUE_TOL))


def solve_si(
    model: SsgModel,
    classes: StateClasses | None = None,
    initial_tau: MinStrategy | None = None,
    cfg: SolverConfig | None = None,
) -> SolverResult:
    if classes is None:
        classes = classify_states(model)
    if cfg is None:
        cfg = SolverConfig()
    budget = Budget(cfg)
    f = initial_lower(model)
    states = classes.unknown_array()
    try:
        v, choice, rounds = si_states(model, states, f, initial_tau, budget)
    except BudgetExhausted as e:
        return SolverResult(f, initial_upper(classes), e.status, 0, budget.elapsed(), "si")
    arr = model.arrays
    tau = MinStrategy({int(s): int(choice[s] - arr.state_ptr[s]) for s in states if not arr.is_max[s]})
    sigma = MaxStrategy(
        {int(s): frozenset([int(choice[s] - arr.state_ptr[s])]) for s in states if arr.is_max[s]}
    )
    return SolverResult(
        v,
        v.copy(),
        Status.PRECISE,
        rounds,
        budget.elapsed(),
        "si",
        diagnostics={"rounds": rounds, "sigma": sigma, "tau": tau},
    )

"""Value iteration, bounded value iteration and optimistic value iteration.

The loops work on an active state set inside full-length value vectors;
entries outside the set are constants.  The global solvers use the unknown
states as the active set, the topological solvers one SCC at a time.
"""

from __future__ import annotations

import numpy as np

from ssgvi.bellman import (
    Deflator,
    Sweep,
    diff_array,
    diff_plus_array,
    ec_region,
    initial_lower,
    initial_upper,
    make_deflator,
)
from ssgvi.graph import StateClasses, classify_states
from ssgvi.model import SsgModel
from ssgvi.solvers.common import (
    STALL_WINDOW,
    Budget,
    BudgetExhausted,
    SolverConfig,
    SolverResult,
    Status,
)


def _step(sweep: Sweep, f: np.ndarray, buf: np.ndarray, gauss_seidel: bool) -> np.ndarray:
    """One backup of the active states of ``f``; returns their previous values."""
    idx = sweep.states
    old = f[idx]
    if gauss_seidel:
        sweep.in_place(f)
    else:
        sweep.synchronous(f, buf)
        f[idx] = buf[idx]
    return old


def vi_loop(sweep: Sweep, L: np.ndarray, cfg: SolverConfig, eps_naive: float, budget: Budget) -> None:
    """Iterate until no active state changes by more than ``eps_naive``."""
    idx = sweep.states
    if not len(idx):
        return
    buf = L.copy()
    while True:
        budget.spend(1, len(idx))
        old = _step(sweep, L, buf, cfg.gauss_seidel)
        if diff_array(old, L[idx], cfg.mode).max() <= eps_naive:
            return


def bvi_loop(
    model: SsgModel,
    classes: StateClasses,
    sweep: Sweep,
    L: np.ndarray,
    U: np.ndarray,
    cfg: SolverConfig,
    budget: Budget,
    region: frozenset[int],
    detect_stall: bool = False,
) -> Status:
    idx = sweep.states
    if not len(idx):
        return Status.CONVERGED
    deflating = cfg.deflate and bool(region)
    buf = L.copy()
    it = 0
    last = None
    same = 0
    while True:
        w = diff_array(L[idx], U[idx], cfg.mode).max()
        if w <= cfg.epsilon:
            return Status.CONVERGED
        if detect_stall:
            if w == last:
                same += 1
                if same >= STALL_WINDOW:
                    return Status.STALLED
            else:
                same = 0
                last = w
        budget.spend(1, 2 * len(idx))
        _step(sweep, L, buf, cfg.gauss_seidel)
        _step(sweep, U, buf, cfg.gauss_seidel)
        it += 1
        if deflating and it % cfg.deflate_every == 0:
            make_deflator(model, classes, L, region).apply(U)


def ovi_loop(
    model: SsgModel,
    classes: StateClasses,
    sweep: Sweep,
    L: np.ndarray,
    U: np.ndarray,
    cfg: SolverConfig,
    budget: Budget,
    region: frozenset[int],
    stats: dict,
) -> Status:
    """Optimistic VI.  ``U`` is only overwritten by a verified bound, so it
    stays sound when the budget runs out.  ``stats['phases']`` counts
    verification phases."""
    idx = sweep.states
    if not len(idx):
        # nothing unknown: the first guess is trivially inductive
        stats["phases"] = stats.get("phases", 0) + 1
        return Status.CONVERGED
    eps_naive = cfg.eps_naive
    while True:
        vi_loop(sweep, L, cfg, eps_naive, budget)
        stats["phases"] = stats.get("phases", 0) + 1
        cand = U.copy()
        cand[idx] = diff_plus_array(L[idx], cfg.epsilon, cfg.mode)
        if cfg.deflate and region:
            deflator = make_deflator(model, classes, L, region)
        else:
            deflator = Deflator(model, [])
        nxt = cand.copy()
        for _ in range(cfg.phase_length(eps_naive)):
            budget.spend(1, len(idx))
            cur = cand[idx]
            if cfg.gauss_seidel:
                nxt[idx] = cur
                sweep.in_place(nxt)
            else:
                sweep.synchronous(cand, nxt)
            deflator.apply(nxt)
            new = nxt[idx]
            if np.all(new <= cur):
                U[idx] = cur
                return Status.CONVERGED
            if cfg.ovi_lower_check and np.all(new >= cur):
                # the guess is below the value, so it is a better lower bound
                L[idx] = np.maximum(L[idx], cur)
                break
            cand[idx] = np.minimum(cur, new)
        eps_naive /= 2.0


def _prepare(model: SsgModel, classes: StateClasses | None, cfg: SolverConfig | None):
    if classes is None:
        classes = classify_states(model)
    if cfg is None:
        cfg = SolverConfig()
    return classes, cfg


def _result(name, L, U, status, budget, **extra) -> SolverResult:
    return SolverResult(
        lower=L,
        upper=U,
        status=status,
        iterations=budget.iterations,
        wall_time=budget.elapsed(),
        algorithm=name,
        backups=budget.backups,
        **extra,
    )


def solve_vi(
    model: SsgModel, classes: StateClasses | None = None, cfg: SolverConfig | None = None
) -> SolverResult:
    """Plain value iteration from below with the naive stopping criterion.

    The result carries no precision guarantee: lower and upper are both the
    final estimate.
    """
    classes, cfg = _prepare(model, classes, cfg)
    budget = Budget(cfg)
    L = initial_lower(model)
    sweep = Sweep(model, classes.unknown_array())
    try:
        vi_loop(sweep, L, cfg, cfg.eps_naive, budget)
        status = Status.CONVERGED
    except BudgetExhausted as e:
        status = e.status
    return _result("vi", L, L.copy(), status, budget, diagnostics={"sound": False})


def solve_bvi(
    model: SsgModel, classes: StateClasses | None = None, cfg: SolverConfig | None = None
) -> SolverResult:
    classes, cfg = _prepare(model, classes, cfg)
    budget = Budget(cfg)
    L = initial_lower(model)
    U = initial_upper(classes)
    sweep = Sweep(model, classes.unknown_array())
    region = ec_region(model, classes) if cfg.deflate else frozenset()
    try:
        status = bvi_loop(model, classes, sweep, L, U, cfg, budget, region)
    except BudgetExhausted as e:
        status = e.status
    return _result("bvi", L, U, status, budget)


def solve_ovi(
    model: SsgModel, classes: StateClasses | None = None, cfg: SolverConfig | None = None
) -> SolverResult:
    classes, cfg = _prepare(model, classes, cfg)
    budget = Budget(cfg)
    L = initial_lower(model)
    U = initial_upper(classes)
    sweep = Sweep(model, classes.unknown_array())
    region = ec_region(model, classes) if cfg.deflate else frozenset()
    stats: dict = {}
    try:
        status = ovi_loop(model, classes, sweep, L, U, cfg, budget, region, stats)
    except BudgetExhausted as e:
        status = e.status
    return _result("ovi", L, U, status, budget, verification_phases=stats.get("phases", 0))

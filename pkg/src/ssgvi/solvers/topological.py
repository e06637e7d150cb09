"""Topological solvers: SCCs are solved bottom-up, with the values of
already-solved components acting as constants."""

from __future__ import annotations

import enum

import numpy as np

from ssgvi.bellman import Sweep, diff_array, ec_region, initial_lower, initial_upper
from ssgvi.graph import StateClasses, classify_states, scc_decomposition
from ssgvi.model import SsgModel
from ssgvi.solvers.common import Budget, BudgetExhausted, SolverConfig, SolverResult, Status
from ssgvi.solvers.iterative import bvi_loop, ovi_loop, vi_loop
from ssgvi.solvers.strategy import (
    chain_values,
    extract_strategies,
    local_optimality_check,
    min_zero_guard,
    si_states,
)


class Inner(str, enum.Enum):
    VI = "vi"
    BVI = "bvi"
    OVI = "ovi"


def _unknown_components(model: SsgModel, classes: StateClasses):
    for comp in scc_decomposition(model).bottom_up():
        states = np.array(sorted(comp & classes.unknown), dtype=np.int64)
        if len(states):
            yield comp, states


def _run_inner(model, classes, cfg, budget, inner, comp, states, L, U, stats) -> Status:
    sweep = Sweep(model, states)
    region = ec_region(model, classes, comp) if cfg.deflate else frozenset()
    if inner is Inner.VI:
        vi_loop(sweep, L, cfg, cfg.eps_naive, budget)
        U[states] = L[states]
        return Status.CONVERGED
    if inner is Inner.BVI:
        return bvi_loop(model, classes, sweep, L, U, cfg, budget, region, detect_stall=True)
    return ovi_loop(model, classes, sweep, L, U, cfg, budget, region, stats)


def solve_topological(
    model: SsgModel,
    classes: StateClasses | None = None,
    cfg: SolverConfig | None = None,
    inner: Inner | str = Inner.BVI,
) -> SolverResult:
    """Topological VI with an inner epsilon-solver per SCC.

    Imprecision of solved components propagates upwards; when a component's
    interval stops shrinking the run ends with status Stalled and the
    diagnostics name the component.
    """
    classes = classify_states(model) if classes is None else classes
    cfg = SolverConfig() if cfg is None else cfg
    inner = Inner(inner)
    budget = Budget(cfg)
    L = initial_lower(model)
    U = initial_upper(classes)
    per_scc = []
    stats: dict = {}
    status = Status.CONVERGED
    for comp, states in _unknown_components(model, classes):
        before = budget.iterations
        try:
            st = _run_inner(model, classes, cfg, budget, inner, comp, states, L, U, stats)
        except BudgetExhausted as e:
            st = e.status
        width = diff_array(L[states], U[states], cfg.mode)
        per_scc.append(
            {
                "states": states.tolist(),
                "iterations": budget.iterations - before,
                "status": st.value,
                "max_width": float(width.max()),
            }
        )
        if st is not Status.CONVERGED:
            status = st
            break
    diagnostics = {"sccs": per_scc}
    if status is Status.STALLED:
        diagnostics["stalled_scc"] = per_scc[-1]["states"]
    return SolverResult(
        L,
        U,
        status,
        budget.iterations,
        budget.elapsed(),
        f"tvi-{inner.value}",
        verification_phases=stats.get("phases", 0),
        backups=budget.backups,
        diagnostics=diagnostics,
    )


def solve_ptvi(
    model: SsgModel,
    classes: StateClasses | None = None,
    cfg: SolverConfig | None = None,
    inner: Inner | str = Inner.BVI,
) -> SolverResult:
    """Precise topological VI.

    Each SCC is approximated, strategies are read off the estimate, the
    induced chain is solved exactly, and the exact values are kept if the
    strategies pass the local optimality check; otherwise strategy iteration
    seeded with the Minimizer strategy solves the SCC.
    """
    classes = classify_states(model) if classes is None else classes
    cfg = SolverConfig() if cfg is None else cfg
    inner = Inner(inner)
    if inner is Inner.OVI:
        raise ValueError("ptvi supports the vi and bvi inner solvers")
    budget = Budget(cfg)
    L = initial_lower(model)
    U = initial_upper(classes)
    checks_passed = 0
    fallbacks: list[list[int]] = []
    try:
        for comp, states in _unknown_components(model, classes):
            try:
                _run_inner(model, classes, cfg, budget, inner, comp, states, L, U, {})
            except BudgetExhausted as e:
                if e.status is Status.TIMEOUT:
                    raise
                # out of iterations: the estimate still seeds the strategies
            budget.check_time()
            sigma, tau = extract_strategies(model, classes, L, U, states.tolist())
            exact = L.copy()
            exact[states] = 0.0
            v = chain_values(model, states, sigma, tau, exact)
            if local_optimality_check(model, sigma, tau, v) and min_zero_guard(model, states, sigma, v, exact):
                checks_passed += 1
            else:
                fallbacks.append(states.tolist())
                v, _, _ = si_states(model, states, exact, tau, budget)
            L[states] = v[states]
            U[states] = v[states]
    except BudgetExhausted as e:
        return SolverResult(
            L, U, e.status, budget.iterations, budget.elapsed(), f"ptvi-{inner.value}", backups=budget.backups
        )
    total = checks_passed + len(fallbacks)
    return SolverResult(
        L,
        U.copy(),
        Status.PRECISE,
        budget.iterations,
        budget.elapsed(),
        f"ptvi-{inner.value}",
        backups=budget.backups,
        diagnostics={
            "sccs": total,
            "local_checks_passed": checks_passed,
            "si_fallbacks": fallbacks,
        },
    )

"""Solution algorithms for simple stochastic games."""

from __future__ import annotations

from typing import Callable

from ssgvi.graph import StateClasses
from ssgvi.model import SsgModel, UsageError
from ssgvi.solvers.common import (
    VALUE_TOL,
    Budget,
    BudgetExhausted,
    SolverConfig,
    SolverResult,
    Status,
)
from ssgvi.solvers.iterative import solve_bvi, solve_ovi, solve_vi
from ssgvi.solvers.markov import SingularSystemError, gaussian_elimination, solve_markov_chain
from ssgvi.solvers.strategy import extract_strategies, local_optimality_check, solve_si
from ssgvi.solvers.topological import Inner, solve_ptvi, solve_topological

Solver = Callable[[SsgModel, "StateClasses | None", SolverConfig], SolverResult]

ALGORITHMS: dict[str, Solver] = {
    "vi": lambda m, c, cfg: solve_vi(m, c, cfg),
    "bvi": lambda m, c, cfg: solve_bvi(m, c, cfg),
    "ovi": lambda m, c, cfg: solve_ovi(m, c, cfg),
    "tvi": lambda m, c, cfg: solve_topological(m, c, cfg, Inner.BVI),
    "tvi-vi": lambda m, c, cfg: solve_topological(m, c, cfg, Inner.VI),
    "tvi-ovi": lambda m, c, cfg: solve_topological(m, c, cfg, Inner.OVI),
    "ptvi": lambda m, c, cfg: solve_ptvi(m, c, cfg, Inner.VI),
    "ptbvi": lambda m, c, cfg: solve_ptvi(m, c, cfg, Inner.BVI),
    "si": lambda m, c, cfg: solve_si(m, c, None, cfg),
}


def solve(model: SsgModel, algorithm: str, cfg: SolverConfig | None = None) -> SolverResult:
    """Run the named algorithm (see :data:`ALGORITHMS`)."""
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise UsageError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}") from None
    return fn(model, None, cfg or SolverConfig())


__all__ = [
    "ALGORITHMS",
    "VALUE_TOL",
    "Budget",
    "BudgetExhausted",
    "Inner",
    "SingularSystemError",
    "SolverConfig",
    "SolverResult",
    "Status",
    "extract_strategies",
    "gaussian_elimination",
    "local_optimality_check",
    "solve",
    "solve_bvi",
    "solve_markov_chain",
    "solve_ovi",
    "solve_ptvi",
    "solve_si",
    "solve_topological",
    "solve_vi",
]

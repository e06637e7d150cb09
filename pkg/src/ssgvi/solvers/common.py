"""Configuration, result and budget types shared by all solvers."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ssgvi.bellman import DiffMode
from ssgvi.model import UsageError

#: Tolerance for value comparisons in optimality checks and strategy switches.
VALUE_TOL = 1e-9

#: Consecutive iterations with a bitwise-unchanged width before a run counts as stalled.
STALL_WINDOW = 1000


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    PRECISE = "Precise"
    TIMEOUT = "Timeout"
    ITERATION_CAP = "IterationCap"
    STALLED = "Stalled"

    @property
    def ok(self) -> bool:
        return self in (Status.CONVERGED, Status.PRECISE)


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``max_backups`` bounds the total number of single-state Bellman backups and
    maps to :attr:`Status.ITERATION_CAP` like ``max_iterations``.
    ``ovi_phase_length`` overrides the ceil(1/eps') verification phase length.
    """

    epsilon: float = 1e-6
    naive_epsilon: float | None = None
    mode: DiffMode = DiffMode.ABSOLUTE
    deflate_every: int = 100
    gauss_seidel: bool = False
    max_iterations: int = 10_000_000
    timeout: float | None = None
    ovi_lower_check: bool = False
    deflate: bool = True
    max_backups: int | None = None
    ovi_phase_length: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", DiffMode(self.mode))
        if not 0.0 < self.epsilon < 1.0:
            raise UsageError(f"epsilon must lie in (0,1), got {self.epsilon}")
        if self.naive_epsilon is not None and not self.naive_epsilon > 0.0:
            raise UsageError(f"naive epsilon must be positive, got {self.naive_epsilon}")
        if self.deflate_every < 1:
            raise UsageError(f"deflate_every must be >= 1, got {self.deflate_every}")
        if self.max_iterations < 1:
            raise UsageError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.timeout is not None and self.timeout <= 0:
            raise UsageError(f"timeout must be positive, got {self.timeout}")
        if self.ovi_phase_length is not None and self.ovi_phase_length < 1:
            raise UsageError(f"ovi_phase_length must be >= 1, got {self.ovi_phase_length}")

    @property
    def eps_naive(self) -> float:
        return self.epsilon if self.naive_epsilon is None else self.naive_epsilon

    def phase_length(self, eps_naive: float) -> int:
        if self.ovi_phase_length is not None:
            return self.ovi_phase_length
        return math.ceil(1.0 / eps_naive)


@dataclass
class SolverResult:
    lower: np.ndarray
    upper: np.ndarray
    status: Status
    iterations: int
    wall_time: float
    algorithm: str = ""
    verification_phases: int = 0
    backups: int = 0
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def bounds_at(self, s: int) -> tuple[float, float]:
        return float(self.lower[s]), float(self.upper[s])

    def width(self) -> np.ndarray:
        return self.upper - self.lower


class BudgetExhausted(Exception):
    def __init__(self, status: Status):
        super().__init__(status.value)
        self.status = status


class Budget:
    """Shared iteration, backup and wall-clock budget for one solver run."""

    def __init__(self, cfg: SolverConfig):
        self.start = time.perf_counter()
        self.deadline = None if cfg.timeout is None else self.start + cfg.timeout
        self.max_iterations = cfg.max_iterations
        self.max_backups = cfg.max_backups
        self.iterations = 0
        self.backups = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def check_time(self) -> None:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise BudgetExhausted(Status.TIMEOUT)

    def spend(self, iterations: int, backups: int) -> None:
        """Charge one unit of work, raising if the budget does not cover it."""
        if self.iterations + iterations > self.max_iterations:
            raise BudgetExhausted(Status.ITERATION_CAP)
        if self.max_backups is not None and self.backups + backups > self.max_backups:
            raise BudgetExhausted(Status.ITERATION_CAP)
        self.check_time()
        self.iterations += iterations
        self.backups += backups

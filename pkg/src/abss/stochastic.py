"""ABS recursion for ``A xi = eta`` with ``eta ~ N_m(v, I_m)``.

The iterate and every steplength are carried as exact affine forms of
``eta``; their normal distributions follow by push-forward.  ``H`` and the
search vectors never depend on ``eta`` and are produced by the same kernel
as the deterministic solver.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

from . import core
from .core import ACCEPTED, INCOMPATIBLE, RUNNING, SKIPPED, SOLVED, Strategy, Tolerances
from .gaussian import (
    AffineScalar,
    AffineVector,
    DimensionError,
    DistSummary,
    GaussianBasis,
    combine,
    cross_cov,
    is_surely_zero,
    mean_of,
    summarize,
    whiten,
)


class NoSteplength(core.AbsError, LookupError):
    """The requested row was skipped or not yet processed, so it has no steplength."""


@dataclasses.dataclass(frozen=True)
class StochasticProblem:
    A: np.ndarray
    basis: GaussianBasis

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2:
            raise core.UnsupportedShape(f"A must be 2-d, got shape {A.shape}")
        if A.shape[0] > A.shape[1]:
            raise core.UnsupportedShape(f"need m <= n, got A of shape {A.shape}")
        if self.basis.dim != A.shape[0]:
            raise DimensionError(f"basis dim {self.basis.dim} != row count {A.shape[0]}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def from_mean(cls, A, mean):
        return cls(A, GaussianBasis(mean))

    @classmethod
    def from_gaussian(cls, A, mean, cov):
        """Build a problem for ``eta ~ N(mean, cov)`` by whitening to identity covariance."""
        A_w, basis = whiten(A, mean, cov)
        return cls(A_w, basis)

    @property
    def shape(self):
        return self.A.shape

    def at(self, eta) -> core.Problem:
        """The deterministic system for one realisation of the right-hand side."""
        return core.Problem(self.A, eta)


@dataclasses.dataclass(frozen=True)
class StochasticRecord:
    row: int
    action: str
    s: np.ndarray
    tau: AffineScalar
    H: np.ndarray
    p: np.ndarray | None = None
    w: np.ndarray | None = None
    denom: float | None = None
    alpha: AffineScalar | None = None


@dataclasses.dataclass(frozen=True)
class StochasticState:
    step: int
    xi: AffineVector
    H: np.ndarray
    xi1: np.ndarray
    basis: GaussianBasis
    tol: Tolerances
    records: tuple[StochasticRecord, ...] = ()
    verdict: str = RUNNING
    incompatible_row: int | None = None

    @property
    def accepted(self):
        return tuple(r for r in self.records if r.action == ACCEPTED)

    @property
    def skipped(self) -> frozenset[int]:
        return frozenset(r.row for r in self.records if r.action == SKIPPED)

    @property
    def rank(self) -> int:
        return len(self.accepted)

    def record(self, row: int) -> StochasticRecord:
        for r in self.records:
            if r.row == row:
                return r
        raise NoSteplength(f"row {row} has not been processed")


@dataclasses.dataclass(frozen=True)
class StochasticSolution:
    xi: AffineVector
    summary: DistSummary
    alpha_summaries: list[DistSummary]
    rows: list[int]
    state: StochasticState


def init_s(problem: StochasticProblem, xi1, H1, tol: Tolerances | None = None) -> StochasticState:
    xi1, H1 = core.check_initial(problem.A, xi1, H1)
    if tol is None:
        tol = Tolerances.for_problem(problem.A, problem.basis.mean)
    xi = AffineVector.const(xi1, problem.basis.dim)
    return StochasticState(step=1, xi=xi, H=H1, xi1=xi1, basis=problem.basis, tol=tol)


def residual_form(state: StochasticState, problem: StochasticProblem, i: int) -> AffineScalar:
    """``tau_i = a_i^T xi_i - eta_i`` as an affine form."""
    tau = state.xi.dot(problem.A[i - 1])
    coeffs = tau.coeffs.copy()
    coeffs[i - 1] -= 1.0
    return AffineScalar(tau.constant, coeffs)


def step_s(state: StochasticState, problem: StochasticProblem, strategy: Strategy) -> StochasticState:
    m = problem.shape[0]
    if state.verdict != RUNNING or state.step > m:
        raise core.StateError(f"cannot step: verdict={state.verdict}, step={state.step}")
    row = state.step
    a = problem.A[row - 1]
    s = state.H @ a
    tau = residual_form(state, problem, row)
    s.setflags(write=False)

    if np.abs(s).max() <= state.tol.zero:
        if is_surely_zero(tau, state.tol.zero):
            rec = StochasticRecord(row, SKIPPED, s, tau, state.H)
            return dataclasses.replace(
                state,
                step=row + 1,
                records=state.records + (rec,),
                verdict=SOLVED if row == m else RUNNING,
            )
        return dataclasses.replace(state, verdict=INCOMPATIBLE, incompatible_row=row)

    p, w, denom, H_next, _, _ = core.abaffian_advance(state.H, a, s, row, strategy, state.tol)
    alpha = tau.scale(1.0 / denom)
    rec = StochasticRecord(row, ACCEPTED, s, tau, H_next, p, w, denom, alpha)
    return dataclasses.replace(
        state,
        step=row + 1,
        xi=combine(state.xi, alpha, p),
        H=H_next,
        records=state.records + (rec,),
        verdict=SOLVED if row == m else RUNNING,
    )


def run_s(problem: StochasticProblem, xi1, H1, strategy: Strategy, tol: Tolerances | None = None):
    state = init_s(problem, xi1, H1, tol)
    while state.verdict == RUNNING:
        state = step_s(state, problem, strategy)
    return state


def solve_s(
    problem: StochasticProblem, xi1, H1, strategy: Strategy, tol: Tolerances | None = None
) -> StochasticSolution:
    state = run_s(problem, xi1, H1, strategy, tol)
    if state.verdict == INCOMPATIBLE:
        raise core.IncompatibleSystem(state.incompatible_row, state)
    acc = state.accepted
    return StochasticSolution(
        xi=state.xi,
        summary=summarize(state.xi, problem.basis),
        alpha_summaries=[summarize(r.alpha, problem.basis) for r in acc],
        rows=[r.row for r in acc],
        state=state,
    )


def alpha_summary(state: StochasticState, i: int) -> DistSummary:
    rec = state.record(i)
    if rec.action != ACCEPTED:
        raise NoSteplength(f"row {i} was skipped and has no steplength")
    return summarize(rec.alpha, state.basis)


def alpha_recursion(state: StochasticState, problem: StochasticProblem, i: int) -> DistSummary:
    """Steplength moments rebuilt from earlier steplength moments.

    Mean ``(a^T xi_1 - a^T sum_j E[alpha_j] p_j - v_i) / a^T p_i`` and
    variance ``(1 + a^T [sum_jk cov(alpha_j, alpha_k) p_j p_k^T] a) / (a^T p_i)^2``
    over accepted rows ``j, k < i``.  Used as an independent check on the
    affine bookkeeping.
    """
    rec = state.record(i)
    if rec.action != ACCEPTED:
        raise NoSteplength(f"row {i} was skipped and has no steplength")
    a = problem.A[i - 1]
    earlier = [r.alpha for r in state.accepted if r.row < i]
    proj = np.array([a @ r.p for r in state.accepted if r.row < i])
    means = np.array([mean_of(alpha, state.basis) for alpha in earlier])
    cov = np.array([[cross_cov(x, y) for y in earlier] for x in earlier]).reshape(len(earlier), len(earlier))
    mean = (a @ state.xi1 - proj @ means - state.basis.mean[i - 1]) / rec.denom
    var = (1.0 + proj @ cov @ proj) / rec.denom**2
    return DistSummary(float(mean), float(var))


def row_form(state: StochasticState, problem: StochasticProblem, l: int) -> AffineScalar:
    """``a_l^T xi`` at the current iterate, as an affine form."""
    if not 1 <= l <= problem.shape[0]:
        raise IndexError(f"row {l} out of range 1..{problem.shape[0]}")
    return state.xi.dot(problem.A[l - 1])


def residual_distribution(state: StochasticState, problem: StochasticProblem, l: int) -> DistSummary:
    """Distribution of ``a_l^T xi`` for an already satisfied row ``l``.

    For every processed, non-skipped row this is exactly ``eta_l``, i.e.
    ``N(v_l, 1)``.
    """
    if not 1 <= l < state.step or l > problem.shape[0]:
        raise IndexError(f"row {l} has not been processed (current step {state.step})")
    if l in state.skipped:
        raise IndexError(f"row {l} was skipped")
    return summarize(row_form(state, problem, l), state.basis)


INTERVAL_PROBABILITY = {1: 0.6827, 2: 0.9545, 3: 0.9973}


class Interval(NamedTuple):
    lo: float
    hi: float
    prob: float


def alpha_interval(summary: DistSummary, k: int) -> Interval:
    """``mean +- k * std`` with its normal coverage probability.

    The half-width uses the standard deviation; the tabulated coverages
    0.6827/0.9545/0.9973 are those of 1, 2 and 3 standard deviations.
    A degenerate (zero variance) steplength is covered with probability 1.
    """
    if k not in INTERVAL_PROBABILITY:
        raise ValueError(f"k must be 1, 2 or 3, got {k!r}")
    mean = float(summary.mean)
    var = float(summary.cov)
    if var < 0:
        raise ValueError("variance must be nonnegative")
    if var == 0.0:
        return Interval(mean, mean, 1.0)
    half = k * float(np.sqrt(var))
    return Interval(mean - half, mean + half, INTERVAL_PROBABILITY[k])

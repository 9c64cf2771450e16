"""Monte Carlo check of the closed-form distributions.

Right-hand sides are drawn from ``N(v, I)``, each one is solved by the
deterministic recursion, and the empirical moments of the solution and of
every steplength are compared with the analytic ones.

Sample ``k`` is always the row ``k % BLOCK`` of block ``k // BLOCK``, and
block ``b`` draws from a Philox stream keyed on ``(seed, b)``.  The samples
therefore depend on ``(seed, k)`` only; ``parallel_chunks`` changes how
blocks are scheduled but never what is computed, and block statistics are
merged by a fixed pairwise tree.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import core, stochastic
from .core import Strategy, Tolerances
from .gaussian import DistSummary

BLOCK = 4096
MEAN_GATE = 4.0
COV_GATE = 5.0


class OracleInconsistency(RuntimeError):
    """A sampled right-hand side was rejected by the deterministic solver."""


@dataclasses.dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int = 0
    parallel_chunks: int = 1

    def __post_init__(self):
        if int(self.samples) < 2:
            raise ValueError(f"samples must be >= 2, got {self.samples}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.parallel_chunks) < 1:
            raise ValueError("parallel_chunks must be positive")


@dataclasses.dataclass(frozen=True)
class AlphaCheck:
    row: int
    empirical_mean: float
    empirical_var: float
    analytic_mean: float
    analytic_var: float
    mean_z: float
    var_dev: float


@dataclasses.dataclass(frozen=True)
class McReport:
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    analytic_mean: np.ndarray
    analytic_cov: np.ndarray
    max_mean_z: float
    max_cov_dev: float
    per_alpha: list[AlphaCheck]
    samples_used: int

    @property
    def mean_pass(self) -> bool:
        return self.max_mean_z <= MEAN_GATE and all(a.mean_z <= MEAN_GATE for a in self.per_alpha)

    @property
    def cov_pass(self) -> bool:
        return self.max_cov_dev <= COV_GATE and all(a.var_dev <= COV_GATE for a in self.per_alpha)

    @property
    def passed(self) -> bool:
        return self.mean_pass and self.cov_pass


@dataclasses.dataclass(frozen=True)
class _Moments:
    """Count, mean and centred second moment of the rows of a sample."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, Y):
        mean = Y.mean(axis=0)
        d = Y - mean
        return cls(Y.shape[0], mean, d.T @ d)

    def merge(self, other):
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return _Moments(n, mean, m2)

    @property
    def cov(self):
        c = self.m2 / (self.n - 1)
        return 0.5 * (c + c.T)


def _reduce(parts):
    while len(parts) > 1:
        merged = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def draw_samples(basis, seed: int, start: int, stop: int) -> np.ndarray:
    """Right-hand sides ``start..stop-1`` (rows) for the given seed."""
    out = []
    for b in range(start // BLOCK, (stop - 1) // BLOCK + 1):
        lo, hi = max(start, b * BLOCK), min(stop, (b + 1) * BLOCK)
        Z = block_rng(seed, b).standard_normal((hi - b * BLOCK, basis.dim))
        out.append(Z[lo - b * BLOCK :])
    return basis.mean + np.concatenate(out)


def compare_cov(emp, analytic, N: int):
    """Largest entrywise deviation in units of its asymptotic standard error.

    The standard error of a sample covariance entry under normality is
    ``sqrt((s_ii s_jj + s_ij^2) / N)``.  Where that is zero, any visible
    deviation counts as infinite.  Returns ``(max_dev, passed)``.
    """
    emp = np.atleast_2d(np.asarray(emp, dtype=float))
    analytic = np.atleast_2d(np.asarray(analytic, dtype=float))
    if emp.shape != analytic.shape:
        raise ValueError(f"shape mismatch: {emp.shape} vs {analytic.shape}")
    d = np.diag(analytic)
    se = np.sqrt(np.abs(np.outer(d, d) + analytic**2) / N)
    diff = np.abs(emp - analytic)
    floor = 1e-12 * (1.0 + np.abs(analytic).max(initial=0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(se > 0, diff / se, np.where(diff <= floor, 0.0, np.inf))
    max_dev = float(scaled.max(initial=0.0))
    return max_dev, max_dev <= COV_GATE


def mean_z(emp, mean, var, N):
    """Standardized deviation ``|emp - mean| / sqrt(var / N)`` per component."""
    emp, mean, var = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (emp, mean, var))
    diff = np.abs(emp - mean)
    se = np.sqrt(np.maximum(var, 0.0) / N)
    floor = 1e-12 * (1.0 + np.abs(mean))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(se > 0, diff / se, np.where(diff <= floor, 0.0, np.inf))


def _block_moments(problem, xi1, H1, strategy, tol, seed, start, stop):
    eta = draw_samples(problem.basis, seed, start, stop)
    try:
        X, alphas, _ = core.solve_batch(problem.A, eta, xi1, H1, strategy, tol)
    except core.IncompatibleSystem as exc:
        raise OracleInconsistency(f"sampled system rejected at row {exc.row}") from exc
    return _Moments.of(np.hstack([X, alphas]))


def run_mc(
    problem: stochastic.StochasticProblem,
    xi1,
    H1,
    strategy: Strategy,
    cfg: McConfig,
    tol: Tolerances | None = None,
    analytic: DistSummary | None = None,
) -> McReport:
    """Sample, solve per sample, and compare with the closed form.

    ``analytic`` replaces the closed-form summary of the final iterate; it
    exists so that a planted or externally supplied answer can be checked
    against the same gates.
    """
    sol = stochastic.solve_s(problem, xi1, H1, strategy, tol)
    tol = sol.state.tol
    N = int(cfg.samples)
    n = problem.shape[1]
    bounds = [(b * BLOCK, min(N, (b + 1) * BLOCK)) for b in range((N + BLOCK - 1) // BLOCK)]

    def work(bound):
        return _block_moments(problem, xi1, H1, strategy, tol, cfg.seed, *bound)

    if cfg.parallel_chunks > 1:
        with ThreadPoolExecutor(max_workers=int(cfg.parallel_chunks)) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    mom = _reduce(parts)
    cov = mom.cov

    target = sol.summary if analytic is None else analytic
    a_mean = np.asarray(target.mean, dtype=float)
    a_cov = np.asarray(target.cov, dtype=float)
    emp_mean, emp_cov = mom.mean[:n], cov[:n, :n]
    z = mean_z(emp_mean, a_mean, np.diag(a_cov), N)
    cov_dev, _ = compare_cov(emp_cov, a_cov, N)

    per_alpha = []
    for k, (row, summ) in enumerate(zip(sol.rows, sol.alpha_summaries)):
        j = n + k
        e_mean, e_var = float(mom.mean[j]), float(cov[j, j])
        per_alpha.append(
            AlphaCheck(
                row=row,
                empirical_mean=e_mean,
                empirical_var=e_var,
                analytic_mean=float(summ.mean),
                analytic_var=float(summ.cov),
                mean_z=float(mean_z(e_mean, summ.mean, summ.cov, N)[0]),
                var_dev=compare_cov(e_var, summ.cov, N)[0],
            )
        )
    return McReport(
        empirical_mean=emp_mean,
        empirical_cov=emp_cov,
        analytic_mean=a_mean,
        analytic_cov=a_cov,
        max_mean_z=float(z.max(initial=0.0)),
        max_cov_dev=cov_dev,
        per_alpha=per_alpha,
        samples_used=N,
    )

"""Deterministic basic ABS class for ``A x = b`` with arbitrary rank.

Rows are processed in input order.  Row numbers in the public API
(``StepRecord.row``, ``AbsState.skipped``, ``IncompatibleSystem.row``) are
1-based equation numbers, matching the usual statement of the recursion.
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

RUNNING = "running"
SOLVED = "solved"
INCOMPATIBLE = "incompatible"

ACCEPTED = "accepted"
SKIPPED = "skipped"


class AbsError(Exception):
    pass


class InvalidInitialization(AbsError, ValueError):
    pass


class UnsupportedShape(AbsError, ValueError):
    pass


class StateError(AbsError, RuntimeError):
    pass


class IllConditionedStep(AbsError, ArithmeticError):
    """``a_i^T p_i`` vanished even after falling back to ``z_i = H_i a_i``."""

    def __init__(self, row, denom):
        super().__init__(f"row {row}: a^T p = {denom:.3e} is numerically zero")
        self.row = row
        self.denom = denom


class IncompatibleSystem(AbsError):
    """Row ``row`` is a linear combination of earlier rows but its residual is not zero."""

    def __init__(self, row, state=None):
        super().__init__(f"system is incompatible at row {row}")
        self.row = row
        self.state = state


def _readonly(x, ndim=None):
    arr = np.array(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise UnsupportedShape(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True)
class Problem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = _readonly(self.A, 2)
        b = _readonly(self.b, 1)
        m, n = A.shape
        if m > n:
            raise UnsupportedShape(f"need m <= n, got A of shape {A.shape}")
        if b.size != m:
            raise UnsupportedShape(f"b has length {b.size}, A has {m} rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.A.shape


# A parameter rule maps (row number, a_i, H_i) to z_i or w_i.
Rule = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


def _row_itself(row, a, H):
    return a


def _unit_vector(row, a, H):
    e = np.zeros(a.size)
    e[row - 1] = 1.0
    return e


@dataclasses.dataclass(frozen=True)
class Strategy:
    """Choice of the Broyden parameter ``z_i`` and the Abaffy parameter ``w_i``.

    ``huang`` uses ``z_i = w_i = a_i``; ``unit`` uses ``z_i = a_i`` and
    ``w_i = e_i``.  Rules never see the iterate, so the ``H`` and ``p``
    sequences depend on ``A`` alone.
    """

    kind: str
    z_rule: Rule
    w_rule: Rule

    @classmethod
    def huang(cls):
        return cls("huang", _row_itself, _row_itself)

    @classmethod
    def unit(cls):
        return cls("unit", _row_itself, _unit_vector)

    @classmethod
    def custom(cls, z_rule: Rule, w_rule: Rule):
        return cls("custom", z_rule, w_rule)

    @classmethod
    def named(cls, name: str):
        try:
            return {"huang": cls.huang, "unit": cls.unit}[name]()
        except KeyError:
            raise ValueError(f"unknown strategy {name!r}; expected 'huang' or 'unit'") from None


@dataclasses.dataclass(frozen=True)
class Tolerances:
    zero: float
    residual: float
    null: float = 1e-9
    tri: float = 1e-9

    @classmethod
    def for_problem(cls, A, b=None, **overrides):
        A = np.asarray(A, dtype=float)
        norm_a = np.abs(A).sum(axis=1).max(initial=0.0)
        norm_b = 0.0 if b is None else np.abs(np.asarray(b, dtype=float)).max(initial=0.0)
        tol = cls(zero=1e-10 * (1.0 + norm_a), residual=1e-9 * (1.0 + norm_b))
        return dataclasses.replace(tol, **overrides)


@dataclasses.dataclass(frozen=True)
class StepRecord:
    """What happened to one equation.

    For skipped rows only ``s`` and ``tau`` are set.  ``H`` is the Abaffian
    after the step in both cases.
    """

    row: int
    action: str
    s: np.ndarray
    tau: float
    H: np.ndarray
    p: np.ndarray | None = None
    w: np.ndarray | None = None
    denom: float | None = None
    alpha: float | None = None
    z_fallback: bool = False
    w_fallback: bool = False


@dataclasses.dataclass(frozen=True)
class AbsState:
    step: int
    x: np.ndarray
    H: np.ndarray
    tol: Tolerances
    records: tuple[StepRecord, ...] = ()
    verdict: str = RUNNING
    incompatible_row: int | None = None

    @property
    def accepted(self) -> tuple[StepRecord, ...]:
        return tuple(r for r in self.records if r.action == ACCEPTED)

    @property
    def skipped(self) -> frozenset[int]:
        return frozenset(r.row for r in self.records if r.action == SKIPPED)

    @property
    def P(self) -> np.ndarray:
        """Accepted search vectors as columns, ``n x k``."""
        acc = self.accepted
        if not acc:
            return np.zeros((self.x.size, 0))
        return np.column_stack([r.p for r in acc])

    @property
    def rank(self) -> int:
        return len(self.accepted)


@dataclasses.dataclass(frozen=True)
class AbsSolution:
    x: np.ndarray
    rank: int
    skipped: frozenset[int]
    state: AbsState


def check_initial(A, x1, H1):
    """Validate ``x1``/``H1`` against ``A``; returns float copies."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if m > n:
        raise UnsupportedShape(f"need m <= n, got A of shape {A.shape}")
    x1 = np.asarray(x1, dtype=float)
    H1 = np.asarray(H1, dtype=float)
    if x1.shape != (n,):
        raise InvalidInitialization(f"x1 must have length {n}, got shape {x1.shape}")
    if H1.shape != (n, n):
        raise InvalidInitialization(f"H1 must be {n}x{n}, got shape {H1.shape}")
    if not np.all(np.isfinite(H1)) or np.linalg.cond(H1) > 1.0 / np.finfo(float).eps:
        raise InvalidInitialization("H1 is singular")
    return _readonly(x1), _readonly(H1)


def init(problem: Problem, x1, H1, tol: Tolerances | None = None) -> AbsState:
    x1, H1 = check_initial(problem.A, x1, H1)
    if tol is None:
        tol = Tolerances.for_problem(problem.A, problem.b)
    return AbsState(step=1, x=x1, H=H1, tol=tol)


def abaffian_advance(H, a, s, row, strategy: Strategy, tol: Tolerances):
    """Search vector and Abaffian update for a row with ``s = H a != 0``.

    Returns ``(p, w, a^T p, H_next, z_fallback, w_fallback)``.  Shared by
    the deterministic and the stochastic recursion so that both build the
    very same ``H`` and ``p`` sequences.
    """
    z = np.asarray(strategy.z_rule(row, a, H), dtype=float)
    z_fallback = abs(z @ s) <= tol.zero
    if z_fallback:
        z = s
    p = H.T @ z
    denom = float(a @ p)
    if abs(denom) <= tol.zero:
        raise IllConditionedStep(row, denom)

    w = np.asarray(strategy.w_rule(row, a, H), dtype=float)
    w_fallback = abs(w @ s) <= tol.zero
    if w_fallback:
        w = s
    H_next = H - np.outer(s, H.T @ w) / (w @ s)
    return _readonly(p), _readonly(w), denom, _readonly(H_next), z_fallback, w_fallback


def step(state: AbsState, problem: Problem, strategy: Strategy) -> AbsState:
    m = problem.shape[0]
    if state.verdict != RUNNING or state.step > m:
        raise StateError(f"cannot step: verdict={state.verdict}, step={state.step}")
    row = state.step
    a = problem.A[row - 1]
    s = state.H @ a
    tau = float(a @ state.x - problem.b[row - 1])

    if np.abs(s).max() <= state.tol.zero:
        if abs(tau) <= state.tol.zero:
            rec = StepRecord(row, SKIPPED, _readonly(s), tau, state.H)
            verdict = SOLVED if row == m else RUNNING
            return dataclasses.replace(
                state, step=row + 1, records=state.records + (rec,), verdict=verdict
            )
        return dataclasses.replace(state, verdict=INCOMPATIBLE, incompatible_row=row)

    p, w, denom, H_next, zfb, wfb = abaffian_advance(state.H, a, s, row, strategy, state.tol)
    alpha = tau / denom
    x_next = _readonly(state.x - alpha * p)
    rec = StepRecord(row, ACCEPTED, _readonly(s), tau, H_next, p, w, denom, alpha, zfb, wfb)
    return dataclasses.replace(
        state,
        step=row + 1,
        x=x_next,
        H=H_next,
        records=state.records + (rec,),
        verdict=SOLVED if row == m else RUNNING,
    )


def run(problem: Problem, x1, H1, strategy: Strategy, tol: Tolerances | None = None) -> AbsState:
    """Iterate until solved or incompatible; never raises on incompatibility."""
    state = init(problem, x1, H1, tol)
    if problem.shape[0] == 0:
        return dataclasses.replace(state, verdict=SOLVED)
    while state.verdict == RUNNING:
        state = step(state, problem, strategy)
    return state


def solve(problem: Problem, x1, H1, strategy: Strategy, tol: Tolerances | None = None) -> AbsSolution:
    state = run(problem, x1, H1, strategy, tol)
    if state.verdict == INCOMPATIBLE:
        raise IncompatibleSystem(state.incompatible_row, state)
    return AbsSolution(state.x, state.rank, state.skipped, state)


def solve_batch(A, B, x1, H1, strategy: Strategy, tol: Tolerances | None = None):
    """Run the recursion for many right-hand sides at once.

    ``B`` holds one right-hand side per row (``N x m``).  ``H`` and ``p``
    do not depend on the right-hand side, so one pass over the equations
    serves every column.  Returns ``(X, alphas, rows)`` with ``X`` of shape
    ``N x n``, ``alphas`` of shape ``N x k`` for the ``k`` accepted rows
    listed in ``rows``.  Raises :class:`IncompatibleSystem` if any
    right-hand side is incompatible.
    """
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    x1, H = check_initial(A, x1, H1)
    if B.shape[1] != A.shape[0]:
        raise UnsupportedShape(f"B must have {A.shape[0]} columns, got {B.shape[1]}")
    if tol is None:
        tol = Tolerances.for_problem(A, B.max(axis=0) if B.size else None)
    X = np.tile(x1, (B.shape[0], 1))
    alphas, rows = [], []
    for k, a in enumerate(A):
        row = k + 1
        s = H @ a
        tau = X @ a - B[:, k]
        if np.abs(s).max() <= tol.zero:
            if np.abs(tau).max(initial=0.0) > tol.zero:
                raise IncompatibleSystem(row)
            continue
        p, _, denom, H, _, _ = abaffian_advance(H, a, s, row, strategy, tol)
        alpha = tau / denom
        X = X - np.outer(alpha, p)
        alphas.append(alpha)
        rows.append(row)
    alphas = np.column_stack(alphas) if alphas else np.zeros((B.shape[0], 0))
    return X, alphas, rows


def variety_point(state: AbsState, q) -> np.ndarray:
    """A point ``x_{m+1} + H_{m+1}^T q`` of the solution set."""
    if state.verdict != SOLVED:
        raise StateError("variety_point needs a solved state")
    q = np.asarray(q, dtype=float)
    return state.x + state.H.T @ q


def residuals(state: AbsState, problem: Problem) -> np.ndarray:
    """``a_j^T x - b_j`` for every processed row, in row order."""
    k = len(state.records)
    return problem.A[:k] @ state.x - problem.b[:k]


def _history_scale(state):
    return max([np.abs(r.H).max(initial=0.0) for r in state.records], default=1.0)


@dataclasses.dataclass(frozen=True)
class FactorizationCheck:
    L: np.ndarray
    offdiag_max: float
    min_abs_diag: float
    ok: bool


def verify_factorization(problem: Problem, state: AbsState) -> FactorizationCheck:
    """Check that ``A_k P_k`` over accepted rows is nonsingular lower triangular."""
    acc = state.accepted
    rows = [r.row - 1 for r in acc]
    P = state.P
    L = problem.A[rows] @ P
    if not acc:
        return FactorizationCheck(L, 0.0, np.inf, True)
    upper = np.triu(L, 1)
    offdiag = float(np.abs(upper).max(initial=0.0))
    min_diag = float(np.abs(np.diag(L)).min())
    scale = 1.0 + np.abs(problem.A[rows]).max() * np.abs(P).max() * problem.shape[1]
    ok = offdiag <= state.tol.tri * scale and min_diag > state.tol.zero
    return FactorizationCheck(L, offdiag, min_diag, bool(ok))


@dataclasses.dataclass(frozen=True)
class NullspaceCheck:
    max_H_a: float
    max_Ht_w: float
    ok: bool


def verify_nullspace(state: AbsState, problem: Problem) -> NullspaceCheck:
    """Check ``H a_j = 0`` for processed rows and ``H^T w_j = 0`` for accepted ones."""
    k = len(state.records)
    if k == 0:
        return NullspaceCheck(0.0, 0.0, True)
    n = problem.shape[1]
    Ha = state.H @ problem.A[:k].T
    max_h_a = float(np.abs(Ha).max(initial=0.0))
    W = [r.w for r in state.accepted]
    max_ht_w = float(np.abs(state.H.T @ np.column_stack(W)).max()) if W else 0.0
    h_scale = 1.0 + _history_scale(state)
    a_scale = 1.0 + np.abs(problem.A[:k]).max()
    w_scale = 1.0 + max((np.abs(w).max() for w in W), default=0.0)
    ok = (
        max_h_a <= state.tol.null * h_scale * a_scale * n
        and max_ht_w <= state.tol.null * h_scale * w_scale * n
    )
    return NullspaceCheck(max_h_a, max_ht_w, bool(ok))

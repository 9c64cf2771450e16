"""JSON problem files and solve reports.

Problem file (``schema_version`` 1)::

    {
      "schema_version": 1,
      "A": [[1, 3, -1, 0, 2, 0], ...],          # m x n, row-major, m <= n
      "rhs": {"kind": "gaussian", "mean": [6, 12, 2]},
             # or {"kind": "deterministic", "b": [...]}
      "x1": "ones",                              # "ones" | "zeros" | [n floats]
      "H1": "identity",                          # "identity" | [[n x n]]
      "strategy": "unit",                        # "unit" | "huang"
      "tolerances": {"zero": 1e-9},              # optional overrides
      "seed": 1, "samples": 100000               # optional Monte Carlo defaults
    }

Reports are plain JSON.  Floats are written with ``repr``, the shortest
string that parses back to the identical double, so a report read back
with :func:`read_report` is bit-for-bit equal to what was written.
Affine forms are always stored as ``{"constant", "coefficients"}``.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from . import core, stochastic
from .core import Tolerances
from .gaussian import AffineScalar, AffineVector, DistSummary, GaussianBasis, summarize

SCHEMA_VERSION = 1


class ProblemFileError(ValueError):
    """Malformed problem file; ``line``/``column`` locate syntax errors."""

    def __init__(self, message, line=None, column=None, field=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column
        self.field = field


class ValidationError(ProblemFileError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}", field=field)


@dataclasses.dataclass(frozen=True)
class ProblemFile:
    A: np.ndarray
    kind: str
    rhs: np.ndarray
    x1: np.ndarray
    H1: np.ndarray
    strategy: str = "unit"
    tolerances: dict = dataclasses.field(default_factory=dict)
    seed: int | None = None
    samples: int | None = None

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def deterministic(self) -> core.Problem:
        return core.Problem(self.A, self.rhs)

    def stochastic(self) -> stochastic.StochasticProblem:
        return stochastic.StochasticProblem(self.A, GaussianBasis(self.rhs))

    def tol(self) -> Tolerances:
        return Tolerances.for_problem(self.A, self.rhs, **self.tolerances)


def _vector(value, field, length=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(field, "expected an array of numbers") from None
    if arr.ndim != 1:
        raise ValidationError(field, f"expected a vector, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise ValidationError(field, f"expected length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(field, "entries must be finite")
    return arr


def problem_from_dict(doc) -> ProblemFile:
    if not isinstance(doc, dict):
        raise ProblemFileError("top level must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r}")
    if "A" not in doc:
        raise ValidationError("A", "missing")
    try:
        A = np.asarray(doc["A"], dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("A", "rows must be equal-length arrays of numbers") from None
    if A.ndim != 2 or A.shape[0] < 1:
        raise ValidationError("A", f"expected a non-empty matrix, got shape {A.shape}")
    m, n = A.shape
    if m > n:
        raise ValidationError("A", f"need rows <= columns, got {m}x{n}")

    rhs = doc.get("rhs")
    if not isinstance(rhs, dict):
        raise ValidationError("rhs", "missing or not an object")
    kind = rhs.get("kind")
    if kind == "gaussian":
        if "cov" in rhs:
            raise ValidationError("rhs.cov", "only identity covariance is read from files")
        vec = _vector(rhs.get("mean"), "rhs.mean", m)
    elif kind == "deterministic":
        vec = _vector(rhs.get("b"), "rhs.b", m)
    else:
        raise ValidationError("rhs.kind", f"expected 'gaussian' or 'deterministic', got {kind!r}")

    x1 = doc.get("x1", "ones")
    if x1 == "ones":
        x1 = np.ones(n)
    elif x1 == "zeros":
        x1 = np.zeros(n)
    else:
        x1 = _vector(x1, "x1", n)

    H1 = doc.get("H1", "identity")
    if H1 == "identity":
        H1 = np.eye(n)
    else:
        try:
            H1 = np.asarray(H1, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("H1", "expected 'identity' or a matrix") from None
        if H1.shape != (n, n):
            raise ValidationError("H1", f"expected {n}x{n}, got shape {H1.shape}")

    strategy = doc.get("strategy", "unit")
    if strategy not in ("unit", "huang"):
        raise ValidationError("strategy", f"expected 'unit' or 'huang', got {strategy!r}")

    tolerances = doc.get("tolerances") or {}
    known = {f.name for f in dataclasses.fields(Tolerances)}
    if not isinstance(tolerances, dict) or not set(tolerances) <= known:
        raise ValidationError("tolerances", f"allowed keys are {sorted(known)}")
    tolerances = {k: float(v) for k, v in tolerances.items()}

    seed = doc.get("seed")
    samples = doc.get("samples")
    if samples is not None and (not isinstance(samples, int) or samples < 2):
        raise ValidationError("samples", "must be an integer >= 2")
    if seed is not None and (not isinstance(seed, int) or not 0 <= seed < 2**64):
        raise ValidationError("seed", "must be a 64-bit unsigned integer")

    return ProblemFile(A, kind, vec, x1, H1, strategy, tolerances, seed, samples)


def parse_problem(path) -> ProblemFile:
    text = Path(path).read_text()
    if not text.strip():
        raise ProblemFileError("empty problem file", line=1, column=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return problem_from_dict(doc)


def _list(x):
    return np.asarray(x, dtype=float).tolist()


def affine_to_dict(x: AffineScalar | AffineVector) -> dict:
    if isinstance(x, AffineScalar):
        return {"constant": x.constant, "coefficients": _list(x.coeffs)}
    return {"constant": _list(x.constant), "coefficients": _list(x.coeffs)}


def affine_from_dict(d) -> AffineScalar | AffineVector:
    if isinstance(d["constant"], list):
        return AffineVector(d["constant"], d["coefficients"])
    return AffineScalar(d["constant"], d["coefficients"])


def summary_to_dict(s: DistSummary) -> dict:
    if np.ndim(s.mean) == 0:
        return {"mean": float(s.mean), "variance": float(s.cov)}
    return {"mean": _list(s.mean), "cov": _list(s.cov)}


def deterministic_report(pf: ProblemFile, state: core.AbsState, trace: bool = False) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "deterministic",
        "strategy": pf.strategy,
        "verdict": state.verdict,
        "rank": state.rank,
        "skipped": sorted(state.skipped),
    }
    if state.verdict == core.INCOMPATIBLE:
        report["incompatible_row"] = state.incompatible_row
    else:
        report["solution"] = _list(state.x)
    if trace:
        steps = []
        for r in state.records:
            rec = {"row": r.row, "action": r.action, "s": _list(r.s), "tau": r.tau}
            if r.action == core.ACCEPTED:
                rec.update(p=_list(r.p), a_dot_p=r.denom, alpha=r.alpha)
            rec["H_next"] = _list(r.H)
            steps.append(rec)
        report["steps"] = steps
    return report


def stochastic_report(
    pf: ProblemFile, state: stochastic.StochasticState, trace: bool = False
) -> dict:
    basis = state.basis
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "gaussian",
        "strategy": pf.strategy,
        "verdict": state.verdict,
        "rank": state.rank,
        "skipped": sorted(state.skipped),
    }
    if state.verdict == core.INCOMPATIBLE:
        report["incompatible_row"] = state.incompatible_row
    else:
        summ = summarize(state.xi, basis)
        report["solution"] = {
            "affine": affine_to_dict(state.xi),
            "mean": _list(summ.mean),
            "cov": _list(summ.cov),
        }
    if trace:
        steps = []
        for r in state.records:
            tau_s = summarize(r.tau, basis)
            rec = {
                "row": r.row,
                "action": r.action,
                "s": _list(r.s),
                "tau": {**affine_to_dict(r.tau), **summary_to_dict(tau_s)},
            }
            if r.action == core.ACCEPTED:
                alpha_s = summarize(r.alpha, basis)
                rec.update(
                    p=_list(r.p),
                    a_dot_p=r.denom,
                    alpha={**affine_to_dict(r.alpha), **summary_to_dict(alpha_s)},
                )
            rec["H_next"] = _list(r.H)
            steps.append(rec)
        report["steps"] = steps
    return report


def mc_to_dict(rep) -> dict:
    return {
        "samples_used": rep.samples_used,
        "empirical_mean": _list(rep.empirical_mean),
        "empirical_cov": _list(rep.empirical_cov),
        "analytic_mean": _list(rep.analytic_mean),
        "analytic_cov": _list(rep.analytic_cov),
        "max_mean_z": rep.max_mean_z,
        "max_cov_dev": rep.max_cov_dev,
        "mean_pass": rep.mean_pass,
        "cov_pass": rep.cov_pass,
        "per_alpha": [dataclasses.asdict(a) for a in rep.per_alpha],
    }


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=1) + "\n")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())

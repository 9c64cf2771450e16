import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"

WORKED_A = np.array(
    [[1, 3, -1, 0, 2, 0],
     [0, -2, 4, 1, 0, 0],
     [0, -4, 1, 0, -2, 1]], dtype=float
)
WORKED_V = np.array([6.0, 12.0, 2.0])
WORKED_X1 = np.ones(6)

# Printed Abaffians after steps 1 and 2 of the worked example.
PRINTED_H2 = np.array(
    [[0, 0, 0, 0, 0, 0],
     [-3, 1, 0, 0, 0, 0],
     [1, 0, 1, 0, 0, 0],
     [0, 0, 0, 1, 0, 0],
     [-2, 0, 0, 0, 1, 0],
     [0, 0, 0, 0, 0, 1]], dtype=float
)
PRINTED_H3 = np.array(
    [[0, 0, 0, 0, 0, 0],
     [0, 0, 0, 0, 0, 0],
     [-5, 2, 1, 0, 0, 0],
     [-1.5, 0.5, 0, 1, 0, 0],
     [-2, 0, 0, 0, 1, 0],
     [0, 0, 0, 0, 0, 1]], dtype=float
)
# Printed final iterate: (constant, coefficients on eta) times 630.
PRINTED_XI4_CONST = np.array([-865, -850, -535, 440, 1440, 15], dtype=float) / 630
PRINTED_XI4_COEFFS = np.array(
    [[479, 120, 315],
     [-388, 300, -630],
     [-199, 300, -315],
     [20, 30, 0],
     [558, -360, 630],
     [-237, 180, -315]], dtype=float
) / 630
# Printed final covariance; inconsistent with the printed components above.
PRINTED_SIGMA = np.array(
    [[0.525, -1.011, -0.331, 0.037, 0.958, -0.475],
     [-1.011, 1.75, 0.886, 0.007, 1.695, 0.865],
     [-0.331, 0.886, 0.538, 0.008, 1.015, 0.503],
     [0.037, 0.007, 0.008, 0.003, -0.004, 0.002],
     [0.958, 1.695, 1.015, -0.004, 1.998, -0.99],
     [-0.495, 0.865, 0.503, 0.002, -0.99, 0.472]]
)
PRINTED_U = np.array([6.47, -1.33, 1.97, 1.46, 2.74, 0.195])


@pytest.fixture
def worked():
    from abss import StochasticProblem

    return StochasticProblem.from_mean(WORKED_A, WORKED_V)


def random_full_rank(rng, m, n):
    """Gaussian ``m x n`` matrix; full row rank with probability one."""
    return rng.standard_normal((m, n))


def random_mixed_rank(rng, m, n, rank):
    """``m x n`` matrix of row rank ``rank``.

    The ``m - rank`` dependent rows are random combinations of the rows
    above them and sit at random positions (never first).  Returns the
    matrix and the 1-based numbers of the dependent rows.
    """
    dependent = set(rng.choice(np.arange(2, m + 1), size=m - rank, replace=False).tolist())
    rows = []
    for k in range(1, m + 1):
        if k in dependent:
            rows.append(rng.standard_normal(len(rows)) @ np.array(rows))
        else:
            rows.append(rng.standard_normal(n))
    return np.array(rows), sorted(dependent)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

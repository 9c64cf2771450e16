"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line, shown in the "acceptance criteria"
section of the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from abss import core, stochastic
from abss.core import Problem, Strategy
from abss.gaussian import DistSummary, GaussianBasis, mean_of
from abss.montecarlo import McConfig, compare_cov, draw_samples, run_mc
from abss.stochastic import StochasticProblem, alpha_interval, alpha_summary, solve_s
from conftest import (
    ACCEPTANCE_LINES,
    PRINTED_H2,
    PRINTED_H3,
    PRINTED_SIGMA,
    PRINTED_U,
    WORKED_A,
    WORKED_V,
    WORKED_X1,
    random_full_rank,
    random_mixed_rank,
)

UNIT = Strategy.unit()
P1 = np.array([1.0, 3, -1, 0, 2, 0])


class Checks:
    def __init__(self, name):
        self.name = name
        self.failed = []
        self.t0 = time.perf_counter()

    def check(self, label, ok):
        if not ok:
            self.failed.append(label)

    def close(self):
        dt = time.perf_counter() - self.t0
        status = "PASS" if not self.failed else "FAIL"
        detail = "" if not self.failed else "  failing: " + "; ".join(self.failed)
        ACCEPTANCE_LINES.append(f"[{status}] {self.name} ({dt:.2f}s){detail}")
        assert not self.failed, f"{self.name}: " + "; ".join(self.failed)


def close(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) <= tol))


@pytest.fixture(scope="module")
def worked_solution():
    p = StochasticProblem.from_mean(WORKED_A, WORKED_V)
    return p, solve_s(p, WORKED_X1, np.eye(6), UNIT)


def test_criterion_1_golden_trace(worked_solution):
    c = Checks("1 worked-example golden trace")
    p, sol = worked_solution
    recs = sol.state.records
    basis = p.basis
    tau1 = recs[0].tau
    c.check("tau_1 ~ (-1, 1)", close([mean_of(tau1, basis), tau1.variance], [-1, 1], 1e-12))
    c.check("alpha_1 ~ (-1/15, 1/225)",
            close([mean_of(recs[0].alpha, basis), recs[0].alpha.variance], [-1 / 15, 1 / 225], 1e-12))
    xi2 = stochastic.step_s(stochastic.init_s(p, WORKED_X1, np.eye(6)), p, UNIT).xi
    c.check("xi_2 mean == (16/15, 18/15, 16/15, 1, 17/15, 1)",
            close(mean_of(xi2, basis), np.array([16, 18, 16, 15, 17, 15]) / 15, 1e-12))
    c.check("xi_2 cov == outer(p_1, p_1)/225",
            close(xi2.coeffs @ xi2.coeffs.T, np.outer(P1, P1) / 225, 1e-12))
    c.check("H_2 printed", close(recs[0].H, PRINTED_H2, 1e-12))
    c.check("H_3 printed", close(recs[1].H, PRINTED_H3, 1e-12))
    c.check("p_2 == (10,-2,4,1,0,0)", close(recs[1].p, [10, -2, 4, 1, 0, 0], 1e-12))
    c.check("alpha_2 mean == 1/63", close(mean_of(recs[1].alpha, basis), 1 / 63, 1e-12))
    c.check("alpha_2 variance == 13/3969", close(recs[1].alpha.variance, 13 / 3969, 1e-12))
    c.check("p_3 == (-1,2,1,0,-2,1)", close(recs[2].p, [-1, 2, 1, 0, -2, 1], 1e-12))
    tau3 = recs[2].tau
    c.check("tau_3 ~ (-1.61, 1.89) within 5e-3",
            close([mean_of(tau3, basis), tau3.variance], [-1.61, 1.89], 5e-3))
    c.close()


def test_criterion_2_final_mean_and_covariance(worked_solution):
    c = Checks("2 final mean U and covariance")
    p, sol = worked_solution
    c.check("U within 5e-3", close(sol.summary.mean, PRINTED_U, 5e-3))
    cov = sol.summary.cov
    c.check("Sigma == M M^T", close(cov, sol.xi.coeffs @ sol.xi.coeffs.T, 1e-14))
    c.check("Sigma(1,1) == (479^2+120^2+315^2)/630^2 within 1e-9",
            abs(cov[0, 0] - (479**2 + 120**2 + 315**2) / 630**2) <= 1e-9)
    rep = run_mc(p, WORKED_X1, np.eye(6), UNIT, McConfig(100_000, seed=1))
    c.check("MC cov gate passes against computed Sigma", rep.cov_pass)
    _, printed_ok = compare_cov(rep.empirical_cov, PRINTED_SIGMA, rep.samples_used)
    c.check("MC cov gate fails against printed Sigma", not printed_ok)
    c.close()


def _residual_identity_ok(state, problem, tol=1e-9):
    m = problem.shape[0]
    for l in range(1, m + 1):
        if l in state.skipped:
            continue
        form = stochastic.row_form(state, problem, l)
        if abs(form.constant) > tol or not close(form.coeffs, np.eye(m)[l - 1], tol):
            return False
    return True


def test_criterion_3_exact_residual_identity(worked_solution):
    c = Checks("3 exact residual identity")
    p, sol = worked_solution
    c.check("worked example", _residual_identity_ok(sol.state, p))
    rng = np.random.default_rng(20240503)
    bad = 0
    for k in range(200):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(1, n + 1))
        prob = StochasticProblem(random_full_rank(rng, m, n), GaussianBasis(rng.normal(0, 3, m)))
        strategy = UNIT if k % 2 else Strategy.huang()
        s = solve_s(prob, rng.standard_normal(n), np.eye(n), strategy)
        bad += not _residual_identity_ok(s.state, prob)
    c.check(f"200 random problems ({bad} bad)", bad == 0)
    c.close()


def test_criterion_4_structural_properties():
    c = Checks("4 structural property suite")
    rng = np.random.default_rng(4242)
    counts = dict(tri=0, null=0, orth=0, skip=0, incompat=0, solved=0)
    for k in range(500):
        n = int(rng.integers(2, 11))
        m = int(rng.integers(2, n + 1))
        rank = int(rng.integers(1, m + 1))
        A, dependent = random_mixed_rank(rng, m, n, rank)
        b = A @ rng.standard_normal(n)
        strategy = Strategy.huang() if k % 2 else UNIT
        problem = Problem(A, b)
        state = core.init(problem, rng.standard_normal(n), np.eye(n))
        while state.verdict == core.RUNNING:
            prev = state
            state = core.step(state, problem, strategy)
            if state.records[-1].action == core.SKIPPED:
                counts["skip"] += not (state.x is prev.x and state.H is prev.H
                                       and state.x.tobytes() == prev.x.tobytes())
            counts["null"] += not core.verify_nullspace(state, problem).ok
        counts["solved"] += not (state.verdict == core.SOLVED and sorted(state.skipped) == dependent)
        fac = core.verify_factorization(problem, state)
        counts["tri"] += not fac.ok
        # a_i . p_j for i < j over accepted rows, scaled like the factor check
        L = fac.L
        scale = 1 + np.abs(A).max() * np.abs(state.P).max(initial=0) * n
        counts["orth"] += bool(np.abs(np.triu(L, 1)).max(initial=0) > 1e-9 * scale)
        if dependent:
            d = dependent[0]
            b_bad = b.copy()
            b_bad[d - 1] += 1.0
            bad_state = core.run(Problem(A, b_bad), np.zeros(n), np.eye(n), strategy)
            counts["incompat"] += bad_state.incompatible_row != d
    for key, n_bad in counts.items():
        c.check(f"{key} ({n_bad} of 500 bad)", n_bad == 0)
    c.close()


def test_criterion_5_monte_carlo_gates(worked_solution):
    c = Checks("5 Monte Carlo gates")
    p, _ = worked_solution
    rep = run_mc(p, WORKED_X1, np.eye(6), UNIT, McConfig(100_000, seed=1))
    c.check(f"4-sigma mean gate (max z {rep.max_mean_z:.2f})", rep.mean_pass)
    c.check(f"5-unit cov gate (max dev {rep.max_cov_dev:.2f})", rep.cov_pass)
    failures = sum(not run_mc(p, WORKED_X1, np.eye(6), UNIT, McConfig(100_000, seed=s)).passed
                   for s in range(100, 120))
    c.check(f"at most one failure over 20 seeds ({failures})", failures <= 1)
    c.close()


def test_criterion_6_theorem_recursion():
    c = Checks("6 steplength recursion cross-check")
    rng = np.random.default_rng(66)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(1, 11))
        m = int(rng.integers(1, n + 1))
        prob = StochasticProblem(random_full_rank(rng, m, n), GaussianBasis(rng.normal(0, 3, m)))
        sol = solve_s(prob, rng.standard_normal(n), np.eye(n), UNIT if k % 2 else Strategy.huang())
        for i in sol.rows:
            d = alpha_summary(sol.state, i)
            r = stochastic.alpha_recursion(sol.state, prob, i)
            worst = max(worst,
                        abs(r.mean - d.mean) / max(abs(d.mean), 1e-300),
                        abs(r.cov - d.cov) / d.cov)
    c.check(f"max relative deviation {worst:.2e} <= 1e-10", worst <= 1e-10)
    c.close()


def test_criterion_7_mean_and_sample_path_consistency(worked_solution):
    c = Checks("7 mean/deterministic and sample-path consistency")
    p, sol = worked_solution
    det = core.solve(Problem(WORKED_A, WORKED_V), WORKED_X1, np.eye(6), UNIT)
    c.check("mean == solve at b = v within 1e-10",
            close(sol.summary.mean, det.x, 1e-10 * np.abs(det.x).max()))
    eta = draw_samples(p.basis, 7, 0, 100)
    worst = 0.0
    for e in eta:
        x = core.solve(Problem(WORKED_A, e), WORKED_X1, np.eye(6), UNIT).x
        worst = max(worst, np.abs(sol.xi.evaluate(e) - x).max() / np.abs(x).max())
    c.check(f"100 samples, max relative deviation {worst:.2e} <= 1e-9", worst <= 1e-9)
    c.close()


def test_criterion_8_intervals(worked_solution):
    c = Checks("8 steplength intervals")
    _, sol = worked_solution
    expected = {1: 0.6827, 2: 0.9545, 3: 0.9973}
    for summ in sol.alpha_summaries + [DistSummary(0.0, 1.0), DistSummary(3.0, 0.25)]:
        for k, prob in expected.items():
            lo, hi, pr = alpha_interval(summ, k)
            half = k * np.sqrt(summ.cov)
            c.check(f"k={k} half-width", abs((hi - lo) / 2 - half) <= 1e-14 * (1 + half)
                    and abs((hi + lo) / 2 - summ.mean) <= 1e-14 * (1 + abs(summ.mean)))
            c.check(f"k={k} probability", pr == prob)
    c.close()

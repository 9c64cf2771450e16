# %% [markdown]
# # Solving with a Gaussian right-hand side
#
# `eta ~ N(v, I)`.  The iterate and every steplength are affine in `eta`,
# so their distributions are exact normals.

# %%
import numpy as np

from abss import stochastic
from abss.core import Strategy
from abss.gaussian import mean_of
from abss.stochastic import StochasticProblem, alpha_interval, solve_s

A = np.array([[1.0, 3, -1, 0, 2, 0],
              [0, -2, 4, 1, 0, 0],
              [0, -4, 1, 0, -2, 1]])
problem = StochasticProblem.from_mean(A, [6.0, 12, 2])
sol = solve_s(problem, np.ones(6), np.eye(6), Strategy.unit())

for rec in sol.state.records:
    tau, alpha = rec.tau, rec.alpha
    print(f"row {rec.row}: tau = {tau.constant:.4f} + {tau.coeffs.round(4)} . eta"
          f"  ~ N({mean_of(tau, problem.basis):.4f}, {tau.variance:.4f});"
          f"  a.p = {rec.denom:g}")

# %% [markdown]
# The final iterate, scaled by 630 so the integer coefficients show.

# %%
print("constant x 630:", (sol.xi.constant * 630).round(6))
print("coefficients x 630:\n", (sol.xi.coeffs * 630).round(6))
print("mean U:", sol.summary.mean.round(4))
print("covariance:\n", sol.summary.cov.round(3))

# %% [markdown]
# Each equation holds identically: `a_l . xi` *is* `eta_l`.

# %%
for l in (1, 2, 3):
    f = stochastic.row_form(sol.state, problem, l)
    print(l, round(f.constant, 12), f.coeffs.round(12))

# %% [markdown]
# Steplength intervals at 1, 2, 3 standard deviations.

# %%
for i, summ in zip(sol.rows, sol.alpha_summaries):
    for k in (1, 2, 3):
        lo, hi, p = alpha_interval(summ, k)
        print(f"alpha_{i}: k={k} [{lo:.4f}, {hi:.4f}] with probability {p}")

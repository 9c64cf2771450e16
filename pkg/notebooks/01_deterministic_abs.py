# %% [markdown]
# # The basic ABS recursion
#
# One equation is satisfied per step.  The Abaffian `H` keeps track of the
# directions still free, so dependent rows are detected (and skipped) and
# contradictory rows stop the run.

# %%
import numpy as np

from abss import core
from abss.core import Problem, Strategy

A = np.array([[1.0, 3, -1, 0, 2, 0],
              [0, -2, 4, 1, 0, 0],
              [0, -4, 1, 0, -2, 1]])
b = np.array([6.0, 12, 2])
sol = core.solve(Problem(A, b), np.ones(6), np.eye(6), Strategy.unit())
print("x =", sol.x.round(4), " rank =", sol.rank)
print("residual:", A @ sol.x - b)

# %% [markdown]
# Every solution is `x + H^T q`: moving along the rows of the final Abaffian
# never breaks an equation.

# %%
q = np.random.default_rng(0).standard_normal(6)
other = core.variety_point(sol.state, q)
print("another solution:", other.round(4), " residual:", np.abs(A @ other - b).max())

# %% [markdown]
# The search vectors make `A P` lower triangular (implicit factorization).

# %%
print(core.verify_factorization(Problem(A, b), sol.state).L)

# %% [markdown]
# Rank deficiency: the third row is the sum of the first two.  With a
# consistent right-hand side it is skipped; otherwise the run stops at it.

# %%
A3 = np.array([[1.0, 2, 0], [0, 1, 1], [1, 3, 1]])
ok = core.solve(Problem(A3, [1.0, 2, 3]), np.zeros(3), np.eye(3), Strategy.huang())
print("skipped rows:", sorted(ok.skipped), " rank:", ok.rank)
try:
    core.solve(Problem(A3, [1.0, 2, 4]), np.zeros(3), np.eye(3), Strategy.huang())
except core.IncompatibleSystem as exc:
    print("incompatible at row", exc.row)

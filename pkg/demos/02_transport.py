"""Exact optimal transport between discrete measures and its dual potentials."""
import numpy as np

from manifold_jko import DiscreteMeasure, kantorovich_dual, product_contraction_check, wasserstein

rng = np.random.default_rng(0)
mu = DiscreteMeasure("circle", rng.uniform(0, 2 * np.pi, (4, 1)))
nu = DiscreteMeasure("circle", rng.uniform(0, 2 * np.pi, (3, 1)), [0.5, 0.3, 0.2])

d2, plan = wasserstein(mu, nu, 2)
d1, _ = wasserstein(mu, nu, 1)
print(f"d1 = {d1:.6f} <= d2 = {d2:.6f}")
print("plan:\n", np.round(plan.matrix, 4))
print("marginal error", plan.marginal_error())

dual = kantorovich_dual(mu, nu)
print("\nphi   ", dual.phi)
print("phi^c ", dual.phi_c)
print("dual value - d2^2/2:", dual.value() - d2**2 / 2)
print("feasibility, slackness:", dual.feasibility_violation(), dual.slackness_violation())

# lifting to M x M at most doubles d1
lhs, rhs, ok = product_contraction_check(mu, nu)
print(f"\nd1(mu x mu, nu x nu) = {lhs:.6f}  <=  2 d1(mu, nu) = {rhs:.6f}: {ok}")

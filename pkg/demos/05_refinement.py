"""Shrinking the step: weak-form residual and Cauchy gaps between interpolations."""
import numpy as np

from manifold_jko import DiscreteMeasure, PowerLaw, SchemeConfig, run_scheme
from manifold_jko import diagnostics as D

mu0 = DiscreteMeasure("sphere2", [[1, 0, 0], [0, 0.6, 0.8]])
spec = PowerLaw(q=1)
T = 0.12

print("weak residual against bump(t) f(x):")
trajs = {tau: run_scheme(mu0, spec, SchemeConfig(tau=tau, horizon_T=T, inner_tol=1e-10))
         for tau in (0.04, 0.02, 0.01)}
for f in D.test_functions("sphere2"):
    row = [D.weak_residual(trajs[tau], f) for tau in (0.04, 0.02, 0.01)]
    print(f"  {f.id:10s}", "  ".join(f"{r:.3e}" for r in row))

# pairing the test function with +grad(W * mu) instead does not vanish as tau -> 0
f = D.TEST_FUNCTIONS[("sphere2", "x")]
print("  opposite sign:", [f"{D.weak_residual(trajs[t], f, transport_sign=1.0):.3e}" for t in (0.04, 0.02, 0.01)])

print("\nCauchy gaps sup_t d2(Geo_tau(t), Geo_tau/2(t)):")
for row in D.tau_refinement_study(mu0, spec, [0.02, 0.01, 0.005, 0.0025], T, np.linspace(0, T, 32)):
    print(f"  tau {row['tau_a']:<7} vs {row['tau_b']:<7} gap {row['gap']:.3e} at t = {row['argmax_time']:.4f}")

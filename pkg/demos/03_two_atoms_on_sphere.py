"""Two attracting atoms on the sphere.

With h(s) = s and equal weights, each step moves both atoms toward each other
by d tau / (1 + 2 tau), where d is their current distance.  The particle
solver reproduces that to solver tolerance.
"""
import numpy as np

from manifold_jko import DiscreteMeasure, PowerLaw, SchemeConfig, get_manifold, run_scheme
from manifold_jko.jko import guaranteed_horizon

sphere = get_manifold("sphere2")
mu0 = DiscreteMeasure("sphere2", [[1, 0, 0], [0, 1, 0]])
tau = 0.01
traj = run_scheme(mu0, PowerLaw(q=1), SchemeConfig(tau=tau, horizon_T=0.2, inner_tol=1e-12))

print("L =", traj.bounds.L, " k_low =", traj.bounds.k_low)
print("guaranteed horizon delta0 / 2L =", guaranteed_horizon(mu0, traj.bounds.L),
      "-> this run is", "guaranteed" if traj.guaranteed else "beyond it")

print("\n step   separation   predicted    energy      delta")
d = np.pi / 2
for k, mu in enumerate(traj.measures):
    sep = sphere.distance(mu.atoms[0], mu.atoms[1])
    print(f"{k:5d}  {sep:.9f}  {d:.9f}  {traj.per_step[k].energy:.6f}  {traj.per_step[k].delta:.6f}")
    d -= 2 * d * tau / (1 + 2 * tau)

"""Every bound along a trajectory, then the same checks against broken trajectories."""
import numpy as np

from manifold_jko import DiscreteMeasure, PowerLaw, SchemeConfig, get_manifold, run_scheme
from manifold_jko import diagnostics as D

rng = np.random.default_rng(3)
torus = get_manifold("torus2")
atoms = torus.random_cap(rng, 6, np.array([0.5, 0.5]), 0.2)
mu0 = DiscreteMeasure("torus2", atoms, rng.dirichlet(np.ones(6)))
traj = run_scheme(mu0, PowerLaw(q=2), SchemeConfig(tau=0.01, horizon_T=0.1, inner_tol=1e-10))

for rep in D.run_checks(traj, D.DEFAULT_CHECKS):
    print(f"{rep.check_id:16s} {rep.status}  margin {rep.worst_margin:.2e}  tol {rep.tolerance:.2e}")

print("\nsquare estimate slack:", D.check_square_estimate(traj).details["slack"])

# a suite that never fails proves nothing
print()
for label, rep in [
    ("teleported atom", D.check_finite_speed(D.teleported_atom(traj, step=4), tol=1e-6)),
    ("inflated steps", D.check_square_estimate(D.inflated_steps(traj, 10.0))),
    ("h(0) = 0.1", D.check_assumptions(D.w0_violating_potential("torus2"), "torus2")),
]:
    print(f"{label:16s} -> {rep.check_id} {rep.status} (margin {rep.worst_margin:.3e}, at {rep.location})")

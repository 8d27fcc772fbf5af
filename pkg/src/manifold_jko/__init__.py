"""Minimizing-movement schemes for intrinsic interaction energies on compact manifolds."""

from .manifold import (CIRCLE, EPS_CUT, SPHERE2, TORUS2, CutLocusError, DomainError, ManifoldId,
                       ManifoldPoint, TangentVector, cut_pair_distance, distance, exp_map,
                       get_manifold, log_map)
from .measure import (DiscreteMeasure, KantorovichDual, NondifferentiableError, TransportPlan,
                      c_transform, d2, grad_c_transform, kantorovich_dual, kr_witness,
                      product_contraction_check, wasserstein)
from .potential import (PotentialSpec, PowerLaw, SmoothedPower, Tabulated, assumption_check,
                        convolve, energy, energy_bounds, grad_convolve, lipschitz_L)
from .jko import (SchemeConfig, Solver, Trajectory, CutIncursionError, delta_cut, grid_oracle,
                  interp_constant, interp_geodesic, jko_step, run_scheme)
from .diagnostics import (CheckReport, TestFunction, check_delta_decay, check_el_residual,
                          check_finite_speed, check_holder, check_square_estimate, run_checks,
                          tau_refinement_study, weak_residual)

__version__ = "0.1.0"

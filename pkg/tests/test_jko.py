import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from manifold_jko.jko import (CutIncursionError, SchemeConfig, Solver, delta_cut, grid_oracle,
                              guaranteed_horizon, interp_constant, interp_geodesic, jko_step,
                              run_scheme, step_index, step_objective)
from manifold_jko.manifold import DomainError, get_manifold
from manifold_jko.measure import DiscreteMeasure, wasserstein
from manifold_jko.potential import PowerLaw, energy, energy_bounds

from conftest import MANIFOLDS, random_measure

E1, E2 = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
LINEAR = PowerLaw(q=1, a=1)


def two_atom_displacement(d, tau):
    """Exact step for two half-mass atoms at distance d under h(s) = s.

    Each atom moves delta toward the other, so the objective is
    (d - 2 delta)^2 / 4 + delta^2 / (2 tau); its stationary point is
    delta = d tau / (1 + 2 tau).
    """
    return d * tau / (1 + 2 * tau)


def test_delta_cut_examples():
    assert delta_cut(DiscreteMeasure("sphere2", [E1])) == pytest.approx(math.pi)
    assert delta_cut(DiscreteMeasure("sphere2", [E1, -E1])) == pytest.approx(0.0, abs=1e-15)
    assert delta_cut(DiscreteMeasure("sphere2", [E1, E2])) == pytest.approx(math.pi / 2)


def test_step_index_is_robust():
    assert step_index(0.3, 0.1) == 3
    assert step_index(0.2999999, 0.1) == 2
    assert step_index(0.0, 0.01) == 0
    assert SchemeConfig(tau=0.01, horizon_T=0.2).n_steps == 20


def test_config_validation():
    for bad in (dict(tau=0.0, horizon_T=1), dict(tau=0.1, horizon_T=-1), dict(tau=0.1, horizon_T=1, inner_tol=0)):
        with pytest.raises(ValueError):
            SchemeConfig(**bad)
    cfg = SchemeConfig(tau=0.01, horizon_T=1)
    assert cfg.tol(2 * math.pi) == pytest.approx(1e-8 * (1 + 2 * math.pi / 0.01))


def test_dirac_is_a_fixed_point():
    mu = DiscreteMeasure("sphere2", [E1])
    nxt, dual, diag = jko_step(mu, LINEAR, SchemeConfig(tau=0.01, horizon_T=1))
    assert np.array_equal(nxt.atoms, mu.atoms)
    assert diag.step_d2 == 0.0 and diag.objective == 0.0


@pytest.mark.parametrize("name", ["circle", "sphere2"])
def test_two_atom_step_closed_form(name):
    if name == "circle":
        mu = DiscreteMeasure("circle", [[0.5], [1.7]])
        d = 1.2
    else:
        mu = DiscreteMeasure("sphere2", [E1, E2])
        d = math.pi / 2
    tau = 0.01
    nxt, _, diag = jko_step(mu, LINEAR, SchemeConfig(tau=tau, horizon_T=1, inner_tol=1e-12))
    delta = two_atom_displacement(d, tau)
    m = get_manifold(name)
    moves = m.distance(mu.atoms, nxt.atoms)
    assert np.allclose(moves, delta, atol=1e-9)
    assert abs(moves[0] - moves[1]) <= 1e-8
    assert m.distance(nxt.atoms[0], nxt.atoms[1]) == pytest.approx(d - 2 * delta, abs=1e-9)
    if name == "sphere2":
        assert np.allclose(nxt.atoms[:, 2], 0.0, atol=1e-12)  # stays on the common great circle


def test_step_respects_finite_speed(rng):
    for name in MANIFOLDS:
        for _ in range(5):
            mu = random_measure(rng, name, 5)
            spec = PowerLaw(q=float(rng.choice([1, 2])))
            cfg = SchemeConfig(tau=0.02, horizon_T=1)
            b = energy_bounds(spec, name)
            _, _, diag = jko_step(mu, spec, cfg, b)
            assert diag.max_displacement <= b.L * cfg.tau + cfg.tol(b.L)
            assert diag.objective <= energy(spec, mu) + 1e-12


def test_short_horizon_has_no_steps():
    traj = run_scheme(DiscreteMeasure("circle", [[0.1], [0.5]]), LINEAR, SchemeConfig(tau=0.1, horizon_T=0.05))
    assert traj.n_steps == 0 and len(traj.measures) == 1


def test_dirac_trajectory_is_constant():
    mu = DiscreteMeasure("torus2", [[0.3, 0.7]])
    traj = run_scheme(mu, PowerLaw(q=2), SchemeConfig(tau=0.05, horizon_T=0.5))
    assert traj.n_steps == 10
    assert all(np.array_equal(m.atoms, mu.atoms) for m in traj.measures)


def test_two_atom_sphere_run_contracts():
    mu = DiscreteMeasure("sphere2", [E1, E2])
    traj = run_scheme(mu, LINEAR, SchemeConfig(tau=0.01, horizon_T=0.2))
    assert traj.status == "completed" and traj.n_steps == 20
    # horizon arithmetic: delta0 / (2L) = (pi/2) / (4 pi) = 1/8
    assert guaranteed_horizon(mu, traj.bounds.L) == pytest.approx(0.125)
    assert not traj.guaranteed
    sep = [get_manifold("sphere2").distance(m.atoms[0], m.atoms[1]) for m in traj.measures]
    assert np.all(np.diff(sep) < 0)
    e = traj.energies
    for k in range(traj.n_steps):
        d = wasserstein(traj.measures[k], traj.measures[k + 1])[0]
        assert e[k + 1] + d * d / (2 * traj.tau) <= e[k] + 1e-8


def test_initial_measure_on_cut_locus_rejected():
    with pytest.raises(CutIncursionError):
        run_scheme(DiscreteMeasure("sphere2", [E1, -E1]), LINEAR, SchemeConfig(tau=0.01, horizon_T=0.1))


def test_assumption_violation_rejected():
    from manifold_jko.diagnostics import w0_violating_potential
    with pytest.raises(ValueError, match="W0"):
        run_scheme(DiscreteMeasure("circle", [[0.0]]), w0_violating_potential("circle"),
                   SchemeConfig(tau=0.01, horizon_T=0.1))


@pytest.fixture(scope="module")
def small_traj():
    mu = DiscreteMeasure("circle", [[0.3], [1.0], [1.6]], [0.3, 0.3, 0.4])
    return run_scheme(mu, LINEAR, SchemeConfig(tau=0.05, horizon_T=0.3, inner_tol=1e-11))


def test_interp_constant(small_traj):
    tr = small_traj
    assert interp_constant(tr, 0.0) is tr.measures[0]
    assert interp_constant(tr, 0.1) is tr.measures[2]
    assert interp_constant(tr, 0.15 - 1e-12) is tr.measures[2]
    with pytest.raises(DomainError):
        interp_constant(tr, 0.31)


def test_interp_geodesic_endpoints(small_traj):
    tr = small_traj
    for k in range(tr.n_steps + 1):
        g = interp_geodesic(tr, k * tr.tau)
        assert wasserstein(g, tr.measures[k])[0] <= 1e-9


def test_interp_geodesic_two_dirac_midpoint():
    mu = DiscreteMeasure("sphere2", [E1])
    tr = run_scheme(mu, LINEAR, SchemeConfig(tau=0.1, horizon_T=0.1))
    far = DiscreteMeasure("sphere2", [E2])
    tr = tr.replace(measures=[mu, far])
    from manifold_jko.diagnostics import rebuild_duals
    tr = rebuild_duals(tr)
    mid = interp_geodesic(tr, 0.05)
    assert mid.n == 1
    assert np.allclose(mid.atoms[0], [math.sqrt(0.5), math.sqrt(0.5), 0], atol=1e-12)


def test_interp_geodesic_is_continuous_in_time(small_traj):
    tr = small_traj
    for k in range(1, tr.n_steps):
        left = interp_geodesic(tr, k * tr.tau - 1e-9)
        assert wasserstein(left, tr.measures[k])[0] <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_grid_oracle_matches_particles_on_circle(seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, "circle", int(rng.integers(2, 5)))
    spec = PowerLaw(q=float(rng.choice([1, 2])))
    cfg = SchemeConfig(tau=0.02, horizon_T=1, inner_tol=1e-11)
    b = energy_bounds(spec, "circle")
    nxt, _, diag = jko_step(mu, spec, cfg, b)
    oracle, obj, gain = grid_oracle(mu, spec, cfg.tau, b.L)
    assert gain >= -1e-12
    assert abs(diag.objective - obj) <= 1e-4
    assert step_objective(spec, oracle, mu, cfg.tau) == pytest.approx(obj, abs=1e-10)


def test_grid_oracle_size_guard(rng):
    with pytest.raises(ValueError):
        grid_oracle(random_measure(rng, "circle", 5), LINEAR, 0.01, 2 * math.pi)


def test_grid_lp_solver_path():
    mu = DiscreteMeasure("circle", [[0.5], [1.7]])
    tr = run_scheme(mu, LINEAR, SchemeConfig(tau=0.01, horizon_T=0.02, solver=Solver.GRID_LP))
    assert tr.n_steps == 2 and tr.per_step[-1].converged


@given(st.integers(0, 10_000), st.sampled_from(MANIFOLDS), st.sampled_from([1.0, 2.0]))
def test_step_descent_property(seed, name, q):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, name, int(rng.integers(1, 5)))
    spec = PowerLaw(q=q)
    cfg = SchemeConfig(tau=0.01, horizon_T=1)
    b = energy_bounds(spec, name)
    nxt, dual, diag = jko_step(mu, spec, cfg, b)
    assert diag.objective <= energy(spec, mu) + 1e-8
    assert diag.max_displacement <= b.L * cfg.tau + cfg.tol(b.L)
    assert dual.feasibility_violation() <= 1e-9

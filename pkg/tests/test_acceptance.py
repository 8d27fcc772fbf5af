"""Acceptance suite: every quantitative bound checked at its stated tolerance.

Each test records one summary line, printed in the ``acceptance criteria``
section at the end of the pytest run.
"""
import time

import numpy as np
import pytest

from manifold_jko import diagnostics as D
from manifold_jko.jko import SchemeConfig, grid_oracle, jko_step, run_scheme
from manifold_jko.measure import DiscreteMeasure, product_contraction_check
from manifold_jko.potential import PowerLaw, energy_bounds

from conftest import MANIFOLDS, random_measure

TAUS = (0.02, 0.01, 0.005)
HORIZON = 0.1
CAP = {"circle": 1.2, "sphere2": 1.2, "torus2": 0.2}


def scenario_specs(count=20, seed=2024):
    """Scenario grid cycling manifold, atom count 2..8, q in {1, 2} and tau."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        name = MANIFOLDS[i % 3]
        n = 2 + i % 7
        q = (1.0, 2.0)[(i // 3) % 2]
        tau = TAUS[(i // 2) % 3]
        mu0 = random_measure(rng, name, n, radius=CAP[name])
        out.append({"id": f"s{i:02d}-{name}-n{n}-q{int(q)}-tau{tau}", "mu0": mu0, "spec": PowerLaw(q=q),
                    "tau": tau})
    return out


@pytest.fixture(scope="module")
def scenarios():
    specs = scenario_specs()
    start = time.perf_counter()
    for s in specs:
        s["traj"] = run_scheme(s["mu0"], s["spec"], SchemeConfig(tau=s["tau"], horizon_T=HORIZON,
                                                                 inner_tol=1e-10))
    return specs, time.perf_counter() - start


def _worst(reports):
    return max(reports, key=lambda r: (not r.passed, r.worst_margin))


def test_scenario_grid_covers_the_ranges(scenarios):
    specs, _ = scenarios
    assert {s["mu0"].manifold.value for s in specs} == set(MANIFOLDS)
    assert {s["mu0"].n for s in specs} == set(range(2, 9))
    assert {s["spec"].q for s in specs} == {1.0, 2.0}
    assert {s["tau"] for s in specs} == set(TAUS)
    assert all(s["traj"].status == "completed" for s in specs)


def test_c01_finite_speed(scenarios, criterion):
    specs, elapsed = scenarios
    start = time.perf_counter()
    reports = [D.check_finite_speed(s["traj"], tol=1e-6) for s in specs]
    elapsed += time.perf_counter() - start
    w = _worst(reports)
    criterion(1, "finite speed", f"worst margin {w.worst_margin:.2e} (tol 1e-6), {elapsed:.1f}s for 20 scenarios")
    assert all(r.passed for r in reports)
    assert elapsed <= 60


def test_c02_square_estimate(scenarios, criterion):
    specs, _ = scenarios
    reports = [D.check_square_estimate(s["traj"], tol=1e-6) for s in specs]
    slack = min(r.details["slack"] for r in reports)
    criterion(2, "square estimate", f"min slack C - sum = {slack:.3e} (tol 1e-6)")
    assert all(r.passed for r in reports)


def test_c03_descent(scenarios, criterion):
    specs, _ = scenarios
    reports = [D.check_descent(s["traj"], tol=1e-8) for s in specs]
    worst = max(r.details["objective"]["signed_excess"] for r in reports)
    criterion(3, "descent inequality", f"max E_{{k+1}} + d^2/2tau - E_k = {worst:.2e} (tol 1e-8)")
    assert all(r.passed for r in reports)


def test_c04_holder(scenarios, criterion):
    specs, _ = scenarios
    reports = [D.check_holder(s["traj"], sample_count=500, seed=i, tol=1e-6, speed_tol=1e-7)
               for i, s in enumerate(specs)]
    h = max(r.details["holder"]["signed_excess"] for r in reports)
    sp = max(r.details["bracket_speed"]["worst_margin"] for r in reports)
    criterion(4, "1/2-Hoelder bound", f"max excess {h:.2e} (tol 1e-6); bracket speed error {sp:.2e} (tol 1e-7)")
    assert all(r.passed for r in reports)


def test_c05_euler_lagrange(scenarios, criterion):
    specs, _ = scenarios
    subset = [s for s in specs if s["mu0"].n <= 4]
    assert len(subset) >= 6
    reports = [D.check_el_residual(s["traj"], rtol=1e-4, var_tol=1e-8) for s in subset]
    rel = max(r.details["max_residual"] / r.details["residual_scale"] for r in reports)
    var = max(r.details["scalar_variance"]["worst_margin"] for r in reports)
    criterion(5, "Euler-Lagrange identity",
              f"max |r| / (L/tau) = {rel:.2e} (tol 1e-4); scalar variance {var:.2e} (tol 1e-8); "
              f"{len(subset)} scenarios")
    assert all(r.passed for r in reports)


def test_c06_delta_decay(scenarios, criterion):
    specs, _ = scenarios
    reports = [D.check_delta_decay(s["traj"], tol=1e-6, closed_form_tol=1e-9) for s in specs]
    cf = max(r.details.get("sphere_closed_form", {"worst_margin": 0.0})["worst_margin"] for r in reports)
    aff = max(r.details["affine_bound"]["signed_excess"] for r in reports)
    criterion(6, "cut-distance decay", f"max bound - delta = {aff:.2e} (tol 1e-6); sphere closed form {cf:.1e} (tol 1e-9)")
    assert all(r.passed for r in reports)


def test_c07_product_contraction(criterion):
    rng = np.random.default_rng(7)
    worst = -np.inf
    for i in range(50):
        name = MANIFOLDS[i % 3]
        mu = random_measure(rng, name, int(rng.integers(1, 5)), radius=CAP[name] * 2)
        nu = random_measure(rng, name, int(rng.integers(1, 5)), radius=CAP[name] * 2)
        lhs, rhs, _ = product_contraction_check(mu, nu)
        worst = max(worst, lhs - rhs)
    criterion(7, "product contraction", f"max d1(mu x mu, nu x nu) - 2 d1(mu, nu) = {worst:.2e} over 50 pairs (tol 1e-9)")
    assert worst <= 1e-9


def test_c08_oracle_equivalence(criterion):
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    gaps = []
    for i in range(10):
        n = 1 + i % 4
        mu = random_measure(rng, "circle", n, radius=1.2)
        spec = PowerLaw(q=(1.0, 2.0)[i % 2])
        cfg = SchemeConfig(tau=TAUS[i % 3], horizon_T=1.0, inner_tol=1e-10)
        b = energy_bounds(spec, "circle")
        _, _, diag = jko_step(mu, spec, cfg, b)
        _, obj, _ = grid_oracle(mu, spec, cfg.tau, b.L, grid_points=200)
        gaps.append(abs(diag.objective - obj))
    elapsed = time.perf_counter() - start
    criterion(8, "oracle equivalence", f"max |particle - grid oracle| = {max(gaps):.2e} (tol 1e-4), {elapsed:.1f}s")
    assert max(gaps) <= 1e-4
    assert elapsed <= 120


def test_c09_weak_residual(criterion):
    mu0 = DiscreteMeasure("sphere2", [[1.0, 0, 0], [0, 0.6, 0.8]])
    trajs = {tau: run_scheme(mu0, PowerLaw(q=1), SchemeConfig(tau=tau, horizon_T=0.12, inner_tol=1e-10))
             for tau in (0.04, 0.02, 0.01)}
    assert all(t.guaranteed and t.status == "completed" for t in trajs.values())
    fns = [D.TEST_FUNCTIONS[("sphere2", fid)] for fid in ("x", "xy_plus_z", "quad_mix")]
    rows = []
    for f in fns:
        res = [D.weak_residual(trajs[tau], f, quadrature_n=64) for tau in (0.04, 0.02, 0.01)]
        rows.append((f.id, res))
    detail = "; ".join(f"{fid}: " + " > ".join(f"{r:.2e}" for r in res) for fid, res in rows)
    criterion(9, "weak-solution residual", detail)
    for _, res in rows:
        assert res[0] > res[1] > res[2]
        assert res[2] <= 0.5 * res[0]


def test_c10_cauchy_gaps(criterion):
    rng = np.random.default_rng(10)
    cases = []
    for i in range(5):
        name = MANIFOLDS[i % 3]
        cases.append((random_measure(rng, name, 2 + i, radius=CAP[name]), PowerLaw(q=(1.0, 2.0)[i % 2])))
    probes = np.linspace(0.0, HORIZON, 32)
    tables = []
    for mu0, spec in cases:
        rows = D.tau_refinement_study(mu0, spec, [0.02, 0.01, 0.005, 0.0025], HORIZON, probes, inner_tol=1e-10)
        tables.append([r["gap"] for r in rows])
    detail = "; ".join(" > ".join(f"{g:.1e}" for g in gaps) for gaps in tables)
    criterion(10, "tau-refinement Cauchy gaps", detail)
    for gaps in tables:
        assert gaps[0] > gaps[1] > gaps[2]


def test_c11_falsifiability(criterion):
    mu0 = DiscreteMeasure("circle", [[0.3], [1.0], [1.6]], [0.3, 0.3, 0.4])
    spec = PowerLaw(q=1)
    traj = run_scheme(mu0, spec, SchemeConfig(tau=0.01, horizon_T=0.1, inner_tol=1e-10))
    unconverged = run_scheme(mu0, spec, SchemeConfig(tau=0.05, horizon_T=0.1, inner_max_iters=1))
    results = {
        "teleported atom": D.check_finite_speed(D.teleported_atom(traj, step=3), tol=1e-6),
        "inflated steps": D.check_square_estimate(D.inflated_steps(traj, 10.0)),
        "unconverged inner solve": D.check_el_residual(unconverged),
        "W0-violating potential": D.check_assumptions(D.w0_violating_potential("circle"), "circle"),
    }
    criterion(11, "falsifiability", "; ".join(
        f"{k} -> {r.check_id} {r.status} (margin {r.worst_margin:.2e} > tol {r.tolerance:.1e})"
        for k, r in results.items()))
    for r in results.values():
        assert not r.passed and r.worst_margin > 0

"""Checks of the quantitative bounds satisfied by minimizing-movement trajectories.

Each check returns a :class:`CheckReport`.  Margins are violation amounts
(``lhs - rhs`` of the inequality being tested) and a report passes iff its
worst margin is at most its tolerance.  Checks with several parts report the
part whose margin exceeds its own tolerance by the largest relative amount.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .jko import (Trajectory, delta_cut, el_residual, interp_geodesic, jko_step,
                  run_scheme, step_index)
from .manifold import ManifoldId, get_manifold
from .measure import DiscreteMeasure, kantorovich_dual, wasserstein
from .potential import Tabulated, assumption_check, convolve, energy, grad_convolve


@dataclass
class CheckReport:
    check_id: str
    passed: bool
    worst_margin: float
    tolerance: float
    location: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_record(self) -> dict:
        return {"check_id": self.check_id, "status": self.status,
                "worst_margin": float(self.worst_margin), "tolerance": float(self.tolerance),
                "location": self.location, "details": _jsonable(self.details)}

    @classmethod
    def from_record(cls, rec: dict) -> "CheckReport":
        return cls(rec["check_id"], rec["status"] == "pass", rec["worst_margin"],
                   rec["tolerance"], rec.get("location", {}), rec.get("details", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _report(check_id, parts, details=None):
    """Combine ``parts = [(name, signed_excess, tol, location), ...]`` into one report.

    ``signed_excess`` is ``lhs - rhs`` of the tested inequality; the reported
    margin is its positive part, so a satisfied bound has margin 0 and the
    signed value is kept in ``details`` as the slack.
    """
    def excess(p):
        margin, tol = max(p[1], 0.0), p[2]
        if tol > 0:
            return (margin - tol) / tol
        return np.inf if margin > 0 else -1.0

    worst = max(parts, key=excess)
    name, raw, tol, loc = worst
    margin = max(float(raw), 0.0)
    loc = dict(loc)
    loc["part"] = name
    det = {p[0]: {"worst_margin": max(float(p[1]), 0.0), "signed_excess": float(p[1]),
                  "tolerance": p[2]} for p in parts}
    det.update(details or {})
    return CheckReport(check_id, bool(margin <= tol), margin, float(tol), loc, det)


def _step_plan_distances(traj: Trajectory, k: int):
    mu, nu = traj.measures[k], traj.measures[k + 1]
    dist, plan = wasserstein(mu, nu, 2)
    dmat = mu.geometry.pairwise_distance(mu.atoms, nu.atoms)
    return dist, plan.matrix, dmat


# -- Euler-Lagrange -------------------------------------------------------------------------

def scalar_el_spread(traj: Trajectory, k: int):
    """Smallest spread of ``phi^c / tau + W * mu_{k+1}`` on the support over optimal duals.

    Discrete Kantorovich potentials are not unique; the Euler-Lagrange scalar
    identity asks for *some* optimal pair making the quantity constant.  An LP
    minimizes the max deviation ``t`` over the optimal dual face; returns
    ``(weighted variance, t)`` at the optimum.
    """
    mu, nu = traj.measures[k], traj.measures[k + 1]
    tau = traj.tau
    m = mu.geometry
    cost = 0.5 * m.pairwise_distance(mu.atoms, nu.atoms) ** 2
    _, plan, _ = _step_plan_distances(traj, k)
    plan = plan.matrix if hasattr(plan, "matrix") else plan
    conv = convolve(traj.spec, nu, nu.atoms)
    n, p = cost.shape
    # variables: phi (n), phi_c (p), c0, t
    nv = n + p + 2
    c = np.zeros(nv)
    c[-1] = 1.0
    rows, rhs = [], []
    for j in range(n):
        for i in range(p):
            r = np.zeros(nv)
            r[j] = r[n + i] = 1.0
            rows.append(r)
            rhs.append(cost[j, i])
    for i in range(p):
        # |phi_c_i / tau + conv_i - c0| <= t
        r = np.zeros(nv)
        r[n + i], r[-2], r[-1] = 1.0 / tau, -1.0, -1.0
        rows.append(r)
        rhs.append(-conv[i])
        r = np.zeros(nv)
        r[n + i], r[-2], r[-1] = -1.0 / tau, 1.0, -1.0
        rows.append(r)
        rhs.append(conv[i])
    eq_rows, eq_rhs = [], []
    for j, i in np.argwhere(plan > 0):
        r = np.zeros(nv)
        r[j] = r[n + i] = 1.0
        eq_rows.append(r)
        eq_rhs.append(cost[j, i])
    bounds = [(None, None)] * (n + p + 1) + [(0.0, None)]
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=np.array(eq_rows),
                  b_eq=np.array(eq_rhs), bounds=bounds, method="highs")
    if res.status != 0:
        return np.inf, np.inf
    phi_c = res.x[n:n + p]
    psi = phi_c / tau + conv
    mean = nu.weights @ psi
    return float(nu.weights @ (psi - mean) ** 2), float(res.x[-1])


def check_el_residual(traj: Trajectory, rtol: float = 1e-4, var_tol: float = 1e-8) -> CheckReport:
    """Euler-Lagrange identity ``grad phi^c / tau + grad (W * mu_{k+1}) = 0`` on the support."""
    scale = traj.bounds.L / traj.tau
    tol = rtol * scale
    worst_r, where_r = 0.0, {}
    worst_v, where_v = 0.0, {}
    findings = []
    for k, dual in enumerate(traj.duals):
        norms, found = el_residual(traj.measures[k + 1], dual, traj.spec, traj.tau)
        findings += [{"step": k + 1, "atom": i, "finding": msg} for i, msg in found]
        if np.any(np.isfinite(norms)):
            i = int(np.nanargmax(norms))
            if norms[i] > worst_r or not where_r:
                worst_r, where_r = float(norms[i]), {"step": k + 1, "atom": i}
        var, _ = scalar_el_spread(traj, k)
        if var > worst_v or not where_v:
            worst_v, where_v = var, {"step": k + 1}
    parts = [("gradient", worst_r, tol, where_r), ("scalar_variance", worst_v, var_tol, where_v)]
    if findings:
        parts.append(("nondifferentiable", float(len(findings)), 0.0, findings[0]))
    return _report("el_residual", parts, {"max_residual": worst_r, "residual_scale": scale,
                                          "findings": findings})


# -- bounds along the trajectory --------------------------------------------------------------

def check_finite_speed(traj: Trajectory, tol: float | None = None) -> CheckReport:
    """Every transported mass element moves at most ``L tau`` per step."""
    L, tau = traj.bounds.L, traj.tau
    if tol is None:
        tol = traj.config.tol(L)
    worst_plan, loc_plan = -L * tau, {"step": 0}
    worst_spt, loc_spt = -L * tau, {"step": 0}
    for k in range(traj.n_steps):
        _, plan, dmat = _step_plan_distances(traj, k)
        on = plan > 0
        disp = float(np.max(dmat[on]))
        to_support = dmat.min(axis=0)
        i = int(np.argmax(to_support))
        if disp - L * tau > worst_plan:
            worst_plan, loc_plan = disp - L * tau, {"step": k + 1}
        if to_support[i] - L * tau > worst_spt:
            worst_spt, loc_spt = float(to_support[i] - L * tau), {"step": k + 1, "atom": i}
    return _report("finite_speed", [("plan_displacement", worst_plan, tol, loc_plan),
                                    ("support_neighbourhood", worst_spt, tol, loc_spt)],
                   {"L_tau": L * tau})


def square_estimate_sum(traj: Trajectory) -> float:
    return float(sum(wasserstein(traj.measures[k], traj.measures[k + 1], 2)[0] ** 2
                     for k in range(traj.n_steps)) / traj.tau)


def square_estimate_constant(traj: Trajectory) -> float:
    return 2.0 * (energy(traj.spec, traj.measures[0]) - traj.bounds.k_low)


def check_square_estimate(traj: Trajectory, tol: float = 1e-6) -> CheckReport:
    """``sum_k d_2(mu_k, mu_{k+1})^2 / tau <= 2 (E(mu_0) - k_low)``."""
    total = square_estimate_sum(traj)
    bound = square_estimate_constant(traj)
    return _report("square_estimate", [("sum", total - bound, tol, {})],
                   {"sum": total, "C": bound, "slack": bound - total})


def check_descent(traj: Trajectory, tol: float = 1e-8) -> CheckReport:
    """``E(mu_{k+1}) + d_2^2 / (2 tau) <= E(mu_k)`` at every step."""
    worst, loc = -np.inf, {"step": 0}
    energies = [energy(traj.spec, mu) for mu in traj.measures]
    for k in range(traj.n_steps):
        d = wasserstein(traj.measures[k], traj.measures[k + 1], 2)[0]
        margin = energies[k + 1] + d * d / (2 * traj.tau) - energies[k]
        if margin > worst:
            worst, loc = margin, {"step": k + 1}
    if not np.isfinite(worst):
        worst = 0.0
    return _report("descent", [("objective", worst, tol, loc)])


def holder_constant(traj: Trajectory) -> float:
    return float(np.sqrt(max(square_estimate_constant(traj), 0.0)))


def check_holder(traj: Trajectory, sample_count: int = 500, seed: int | None = None,
                 tol: float = 1e-6, speed_tol: float = 1e-7,
                 bracket_samples: int | None = None) -> CheckReport:
    """1/2-Hoelder bound of the geodesic interpolation, plus the in-bracket speed identity."""
    rng = np.random.default_rng(traj.config.seed if seed is None else seed)
    t_end = traj.n_steps * traj.tau
    c_holder = holder_constant(traj)
    worst_h, loc_h = -np.inf, {}
    worst_s, loc_s = 0.0, {}
    if traj.n_steps == 0:
        return _report("holder", [("holder", 0.0, tol, {}), ("bracket_speed", 0.0, speed_tol, {})])

    geo_cache = {}

    def geo(t):
        if t not in geo_cache:
            geo_cache[t] = interp_geodesic(traj, t)
        return geo_cache[t]

    for _ in range(sample_count):
        s, t = np.sort(rng.uniform(0.0, t_end, size=2))
        d = wasserstein(geo(t), geo(s), 2)[0]
        margin = d - c_holder * np.sqrt(t - s)
        if margin > worst_h:
            worst_h, loc_h = float(margin), {"s": float(s), "t": float(t)}
    step_d = [wasserstein(traj.measures[k], traj.measures[k + 1], 2)[0] for k in range(traj.n_steps)]
    n_bracket = sample_count // 5 if bracket_samples is None else bracket_samples
    for _ in range(n_bracket):
        k = int(rng.integers(traj.n_steps))
        t1, t2 = np.sort(k * traj.tau + traj.tau * rng.uniform(0.0, 1.0, size=2))
        if step_index(t2, traj.tau) != k or step_index(t1, traj.tau) != k:
            continue
        d = wasserstein(geo(t2), geo(t1), 2)[0]
        err = abs(d - (t2 - t1) / traj.tau * step_d[k])
        if err > worst_s:
            worst_s, loc_s = float(err), {"step": k, "t1": float(t1), "t2": float(t2)}
    return _report("holder", [("holder", worst_h, tol, loc_h),
                              ("bracket_speed", worst_s, speed_tol, loc_s)],
                   {"C_holder": c_holder})


def check_delta_decay(traj: Trajectory, tol: float = 1e-6, closed_form_tol: float = 1e-9) -> CheckReport:
    """``delta(mu_k) >= delta(mu_0) - 2 k tau L``; on the sphere also ``delta = pi - diam(spt)``."""
    L, tau = traj.bounds.L, traj.tau
    deltas = [delta_cut(mu) for mu in traj.measures]
    worst, loc = -np.inf, {"step": 0}
    vacuous = []
    for k, d in enumerate(deltas):
        bound = deltas[0] - 2 * k * tau * L
        if bound < 0:
            vacuous.append(k)
        if bound - d > worst:
            worst, loc = bound - d, {"step": k}
    parts = [("affine_bound", float(worst), tol, loc)]
    if traj.manifold == ManifoldId.SPHERE2:
        cf = 0.0
        loc_cf = {"step": 0}
        for k, mu in enumerate(traj.measures):
            # half-angle formula, independent of the distance routine and accurate at 0 and pi
            a = mu.atoms
            chord = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=-1)
            anti = np.linalg.norm(a[:, None, :] + a[None, :, :], axis=-1)
            diam = float(np.max(2.0 * np.arctan2(chord, anti)))
            err = abs(deltas[k] - (np.pi - diam))
            if err > cf:
                cf, loc_cf = err, {"step": k}
        parts.append(("sphere_closed_form", cf, closed_form_tol, loc_cf))
    return _report("delta_decay", parts, {"deltas": deltas, "vacuous_from_step": vacuous[:1]})


def check_assumptions(spec, manifold) -> CheckReport:
    """Grid audit of the potential's standing assumptions; a failed part has positive margin."""
    rep = assumption_check(spec, manifold)
    parts = []
    for name, r in rep.results.items():
        margin = 0.0 if r.passed else max(r.worst_value, np.finfo(float).tiny)
        parts.append((name, margin, 0.0, {"grid_point": r.worst_point}))
    return _report("assumptions", parts, {k: r.detail for k, r in rep.results.items()})


def check_oracle(traj: Trajectory, tol: float = 1e-4, max_steps: int = 3) -> CheckReport:
    """Particle steps against the grid oracle on the first ``max_steps`` steps (n <= 4)."""
    from dataclasses import replace
    from .jko import Solver, step_objective

    worst, loc = 0.0, {}
    cfg = replace(traj.config, solver=Solver.GRID_LP)
    for k in range(min(max_steps, traj.n_steps)):
        mu = traj.measures[k]
        if mu.n > 4:
            continue
        _, _, diag = jko_step(mu, traj.spec, cfg, traj.bounds)
        ours = step_objective(traj.spec, traj.measures[k + 1], mu, traj.tau)
        gap = abs(ours - diag.objective)
        if gap > worst or not loc:
            worst, loc = gap, {"step": k + 1}
    return _report("oracle", [("objective_gap", worst, tol, loc)])


# -- weak formulation -----------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """``phi(t, x) = bump(t) f(x)`` with closed-form spatial gradient."""

    __test__ = False  # not a pytest class

    id: str
    manifold: ManifoldId
    f: object
    grad: object
    horizon: float = 1.0
    margin: float = 0.05

    def _u(self, t):
        lo, hi = self.margin * self.horizon, (1 - self.margin) * self.horizon
        return (2.0 * np.asarray(t, dtype=float) - (lo + hi)) / (hi - lo), 2.0 / (hi - lo)

    def bump(self, t):
        u, _ = self._u(t)
        inside = np.abs(u) < 1
        safe = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

    def dbump(self, t):
        u, du = self._u(t)
        inside = np.abs(u) < 1
        safe = np.where(inside, u, 0.0)
        b = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)
        return np.where(inside, b * (-2.0 * safe / (1.0 - safe**2) ** 2) * du, 0.0)

    def with_horizon(self, horizon: float) -> "TestFunction":
        from dataclasses import replace
        return replace(self, horizon=horizon)


def _sphere_grad(egrad):
    def g(x):
        x = np.atleast_2d(x)
        e = egrad(x)
        return e - np.sum(e * x, axis=-1, keepdims=True) * x
    return g


def _registry():
    two_pi = 2 * np.pi
    c, s, t = ManifoldId.CIRCLE, ManifoldId.SPHERE2, ManifoldId.TORUS2
    z = np.zeros
    fns = [
        TestFunction("const", c, lambda x: np.ones(len(np.atleast_2d(x))), lambda x: z((len(np.atleast_2d(x)), 1))),
        TestFunction("cos", c, lambda x: np.cos(np.atleast_2d(x)[:, 0]),
                     lambda x: -np.sin(np.atleast_2d(x)[:, :1])),
        TestFunction("sin2", c, lambda x: np.sin(2 * np.atleast_2d(x)[:, 0]),
                     lambda x: 2 * np.cos(2 * np.atleast_2d(x)[:, :1])),
        TestFunction("trig_mix", c,
                     lambda x: np.cos(np.atleast_2d(x)[:, 0]) + 0.3 * np.sin(3 * np.atleast_2d(x)[:, 0]),
                     lambda x: -np.sin(np.atleast_2d(x)[:, :1]) + 0.9 * np.cos(3 * np.atleast_2d(x)[:, :1])),
        TestFunction("const", s, lambda x: np.ones(len(np.atleast_2d(x))), lambda x: z((len(np.atleast_2d(x)), 3))),
        TestFunction("x", s, lambda x: np.atleast_2d(x)[:, 0],
                     _sphere_grad(lambda x: np.tile([1.0, 0.0, 0.0], (len(x), 1)))),
        TestFunction("xy_plus_z", s, lambda x: np.atleast_2d(x)[:, 0] * np.atleast_2d(x)[:, 1] + np.atleast_2d(x)[:, 2],
                     _sphere_grad(lambda x: np.stack([x[:, 1], x[:, 0], np.ones(len(x))], axis=1))),
        TestFunction("quad_mix", s,
                     lambda x: np.atleast_2d(x)[:, 0] ** 2 - 0.5 * np.atleast_2d(x)[:, 1] + np.atleast_2d(x)[:, 1] * np.atleast_2d(x)[:, 2],
                     _sphere_grad(lambda x: np.stack([2 * x[:, 0], -0.5 + x[:, 2], x[:, 1]], axis=1))),
        TestFunction("const", t, lambda x: np.ones(len(np.atleast_2d(x))), lambda x: z((len(np.atleast_2d(x)), 2))),
        TestFunction("sin_u", t, lambda x: np.sin(two_pi * np.atleast_2d(x)[:, 0]),
                     lambda x: np.stack([two_pi * np.cos(two_pi * np.atleast_2d(x)[:, 0]),
                                         np.zeros(len(np.atleast_2d(x)))], axis=1)),
        TestFunction("cos_u_sin_v", t,
                     lambda x: np.cos(two_pi * np.atleast_2d(x)[:, 0]) * np.sin(two_pi * np.atleast_2d(x)[:, 1]),
                     lambda x: two_pi * np.stack([
                         -np.sin(two_pi * np.atleast_2d(x)[:, 0]) * np.sin(two_pi * np.atleast_2d(x)[:, 1]),
                         np.cos(two_pi * np.atleast_2d(x)[:, 0]) * np.cos(two_pi * np.atleast_2d(x)[:, 1])], axis=1)),
        TestFunction("cos_u_plus_v", t, lambda x: np.cos(two_pi * np.atleast_2d(x).sum(axis=1)),
                     lambda x: np.repeat((-two_pi * np.sin(two_pi * np.atleast_2d(x).sum(axis=1)))[:, None], 2, axis=1)),
    ]
    return {(f.manifold, f.id): f for f in fns}


TEST_FUNCTIONS = _registry()


def test_functions(manifold, include_constant: bool = False):
    mid = get_manifold(manifold).id
    return [f for (m, i), f in TEST_FUNCTIONS.items() if m == mid and (include_constant or i != "const")]


def weak_residual(traj: Trajectory, f: TestFunction, quadrature_n: int = 64,
                  transport_sign: float = -1.0) -> float:
    """Space-time residual of the weak aggregation equation along the geodesic interpolation.

    Integrates ``sum_a w_a [d_t phi(t, x_a) + sign * <grad phi(t, x_a), grad (W * mu_t)(x_a)>]``
    over ``[0, T]`` with ``quadrature_n`` Gauss-Legendre nodes inside every
    bracket ``[k tau, (k+1) tau]`` (nodes never touch bracket ends).  With
    ``transport_sign = -1`` the transport term matches the velocity
    ``-grad (W * mu)`` of the minimizing-movement dynamics; ``+1`` is the
    opposite pairing.
    """
    if traj.status != "completed":
        raise RuntimeError(f"weak residual needs a trajectory without cut incursion (status {traj.status})")
    f = f.with_horizon(traj.config.horizon_T)
    nodes, wts = np.polynomial.legendre.leggauss(quadrature_n)
    tau, horizon = traj.tau, traj.config.horizon_T
    edges = [k * tau for k in range(traj.n_steps + 1)]
    if horizon > edges[-1] + 1e-15:
        edges.append(horizon)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        ts = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        for t, wq in zip(ts, 0.5 * (b - a) * wts):
            mu_t = interp_geodesic(traj, t)
            x = mu_t.atoms
            drift = grad_convolve(traj.spec, mu_t, x)
            val = f.dbump(t) * f.f(x) + transport_sign * f.bump(t) * np.sum(f.grad(x) * drift, axis=-1)
            total += wq * float(mu_t.weights @ val)
    return abs(total)


def tau_refinement_study(mu0, spec, tau_list, horizon_T, probe_times, **config_kw):
    """Cauchy gaps ``sup_t d_2(Geo_{tau_i}(t), Geo_{tau_{i+1}}(t))`` over ``probe_times``.

    Returns a list of dict rows, one per consecutive pair in ``tau_list``.
    """
    from .jko import SchemeConfig

    trajs = [run_scheme(mu0, spec, SchemeConfig(tau=tau, horizon_T=horizon_T, **config_kw))
             for tau in tau_list]
    rows = []
    for (ta, tra), (tb, trb) in zip(zip(tau_list, trajs), zip(tau_list[1:], trajs[1:])):
        gaps = [wasserstein(interp_geodesic(tra, t), interp_geodesic(trb, t), 2)[0] for t in probe_times]
        i = int(np.argmax(gaps))
        rows.append({"tau_a": ta, "tau_b": tb, "gap": float(gaps[i]), "argmax_time": float(probe_times[i])})
    return rows


# -- adversarial fixtures -----------------------------------------------------------------------

def rebuild_duals(traj: Trajectory) -> Trajectory:
    duals = [kantorovich_dual(traj.measures[k], traj.measures[k + 1]) for k in range(traj.n_steps)]
    return traj.replace(duals=duals)


def teleported_atom(traj: Trajectory, step: int = 1, factor: float = 2.0) -> Trajectory:
    """Move atom 0 of ``mu_step`` an extra ``factor * L * tau`` away from the rest of the support."""
    m = get_manifold(traj.manifold)
    mu = traj.measures[step]
    atoms = mu.atoms.copy()
    others = atoms[1:] if mu.n > 1 else None
    if others is not None:
        away = -np.sum(m.log(np.broadcast_to(atoms[0], others.shape), others), axis=0)
    else:
        away = m.tangent_basis(atoms[0])[0]
    away = m.to_tangent(atoms[0], away)
    nrm = np.linalg.norm(away)
    if nrm == 0:
        away, nrm = m.tangent_basis(atoms[0])[0], 1.0
    atoms[0] = m.exp(atoms[0], away / nrm * factor * traj.bounds.L * traj.tau)
    measures = list(traj.measures)
    measures[step] = DiscreteMeasure(m.id, atoms, mu.weights)
    return rebuild_duals(traj.replace(measures=measures))


def inflated_steps(traj: Trajectory, factor: float = 10.0) -> Trajectory:
    """Stretch every step displacement by ``factor`` along its geodesic."""
    m = get_manifold(traj.manifold)
    measures = [traj.measures[0]]
    for k in range(traj.n_steps):
        prev_orig, nxt = traj.measures[k], traj.measures[k + 1]
        if prev_orig.n != nxt.n:
            raise ValueError("inflation needs atom-preserving steps")
        v = m.log(prev_orig.atoms, nxt.atoms)
        measures.append(DiscreteMeasure(m.id, m.exp(measures[-1].atoms, factor * v), nxt.weights))
    return rebuild_duals(traj.replace(measures=measures))


def w0_violating_potential(manifold, offset: float = 0.1) -> Tabulated:
    """Attractive profile shifted so that ``h(0) = offset``."""
    s_max = get_manifold(manifold).diameter ** 2
    return Tabulated.from_function(lambda s: s + offset, lambda s: np.ones_like(s), s_max)


# -- registry --------------------------------------------------------------------------------------

CHECKS = {
    "el_residual": lambda traj, **kw: check_el_residual(traj, **kw),
    "finite_speed": lambda traj, **kw: check_finite_speed(traj, **kw),
    "square_estimate": lambda traj, **kw: check_square_estimate(traj, **kw),
    "descent": lambda traj, **kw: check_descent(traj, **kw),
    "holder": lambda traj, **kw: check_holder(traj, **kw),
    "delta_decay": lambda traj, **kw: check_delta_decay(traj, **kw),
    "assumptions": lambda traj, **kw: check_assumptions(traj.spec, traj.manifold),
    "oracle": lambda traj, **kw: check_oracle(traj, **kw),
}
DEFAULT_CHECKS = ("assumptions", "descent", "finite_speed", "square_estimate", "holder",
                  "delta_decay", "el_residual")


def run_checks(traj: Trajectory, check_ids=DEFAULT_CHECKS, threads: int = 1, options=None):
    """Run checks by id; results come back in the order requested."""
    options = options or {}
    unknown = [c for c in check_ids if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check ids {unknown}; valid ids: {sorted(CHECKS)}")
    if threads <= 1:
        return [CHECKS[c](traj, **options.get(c, {})) for c in check_ids]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(CHECKS[c], traj, **options.get(c, {})) for c in check_ids]
        return [fut.result() for fut in futures]

"""Minimizing movement (JKO) scheme for the interaction energy.

One step solves

    mu_{k+1} = argmin_rho  E_W(rho) + d_2(rho, mu_k)^2 / (2 tau)

either with Lagrangian particles (weights frozen, atoms moved by Riemannian
gradient descent with Armijo backtracking) or, as an independent oracle for
small instances, by exhaustive enumeration over local grids followed by a
mass-splitting pairwise Frank-Wolfe pass.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .manifold import EPS_CUT, CutLocusError, DomainError, get_manifold
from .measure import (DiscreteMeasure, KantorovichDual, NondifferentiableError,
                      grad_c_transform, kantorovich_dual, solve_transport, wasserstein)
from .potential import (EnergyBounds, PotentialSpec, assumption_check, convolve,
                        energy, energy_bounds, grad_convolve, w_matrix)

ARMIJO_C = 1e-4
ARMIJO_BACKTRACK = 0.5
ARMIJO_MAX_HALVINGS = 60
INTERP_MERGE_TOL = 1e-10


class Solver(str, Enum):
    PLAN_GRADIENT_DESCENT = "plan_gd"
    GRID_LP = "grid_lp"


class CutIncursionError(CutLocusError):
    """An atom pair reached the cut locus during a step."""

    step = None


class StagnationError(RuntimeError):
    """Backtracking could not decrease the step objective."""

    step = None


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    horizon_T: float
    inner_tol: float | None = None
    inner_max_iters: int = 500
    solver: Solver = Solver.PLAN_GRADIENT_DESCENT
    seed: int = 0
    grid_points: int = 200

    def __post_init__(self):
        object.__setattr__(self, "solver", Solver(self.solver))
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.horizon_T > 0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")
        if self.inner_tol is not None and not self.inner_tol > 0:
            raise ValueError(f"inner_tol must be positive, got {self.inner_tol}")
        if int(self.inner_max_iters) < 1:
            raise ValueError("inner_max_iters must be a positive integer")

    @property
    def n_steps(self) -> int:
        return step_index(self.horizon_T, self.tau)

    def tol(self, L: float) -> float:
        """Inner stopping tolerance; defaults to ``1e-8 (1 + L / tau)``."""
        return self.inner_tol if self.inner_tol is not None else 1e-8 * (1.0 + L / self.tau)


def step_index(t: float, tau: float) -> int:
    """``floor(t / tau)`` that treats ``t`` within round-off of a multiple of ``tau`` as exact."""
    q = t / tau
    k = round(q)
    if abs(q - k) <= 1e-13 * max(1.0, abs(q)):
        return int(k)
    return int(math.floor(q))


def delta_cut(mu: DiscreteMeasure) -> float:
    """Distance of ``spt(mu) x spt(mu)`` to the cut locus (pairs ``x = y`` included)."""
    m = mu.geometry
    a = mu.atoms
    return float(np.min(m.cut_pair_distance(a[:, None, :], a[None, :, :])))


def guaranteed_horizon(mu0: DiscreteMeasure, L: float) -> float:
    return delta_cut(mu0) / (2.0 * L)


@dataclass
class StepDiagnostics:
    objective_before: float
    objective: float
    energy: float
    step_d2: float
    max_displacement: float
    iterations: int
    grad_norm: float
    converged: bool
    solver: str
    oracle_split_gain: float = 0.0

    @property
    def objective_decrease(self) -> float:
        return self.objective_before - self.objective


def step_objective(spec: PotentialSpec, rho: DiscreteMeasure, mu_prev: DiscreteMeasure, tau: float) -> float:
    return energy(spec, rho) + wasserstein(rho, mu_prev, 2)[0] ** 2 / (2.0 * tau)


# -- Lagrangian particle solver ------------------------------------------------------------

class _ParticleObjective:
    """Objective and metric gradient for atoms ``X`` carrying frozen weights ``w``."""

    def __init__(self, spec, mu_prev, tau):
        self.spec = spec
        self.m = mu_prev.geometry
        self.y = mu_prev.atoms
        self.w = mu_prev.weights
        self.tau = tau

    def __call__(self, x):
        m, w, y = self.m, self.w, self.y
        dxy = m.pairwise_distance(x, y)
        plan, cost, _, _ = solve_transport(w, w, dxy**2)
        dxx = m.pairwise_distance(x, x)
        f = 0.5 * w @ self.spec.h(dxx**2) @ w + cost / (2.0 * self.tau)
        return f, plan, dxy

    def gradient(self, x, plan):
        m, w, y = self.m, self.w, self.y
        try:
            logs_xx = m.log(x[:, None, :], x[None, :, :])
            logs_xy = m.log(x[:, None, :], y[None, :, :])
        except CutLocusError as exc:
            raise CutIncursionError(f"inner iterate reached the cut locus: {exc}", x=exc.x, y=exc.y) from exc
        d2 = np.sum(logs_xx**2, axis=-1)
        g_energy = -2.0 * np.einsum("ij,ijk->ik", self.spec.dh(d2) * w[None, :], logs_xx)
        g_transport = -np.einsum("ij,ijk->ik", plan / w[:, None], logs_xy) / self.tau
        return g_energy + g_transport


def _plan_gradient_descent(mu_prev, spec, config, L):
    obj = _ParticleObjective(spec, mu_prev, config.tau)
    m, w = obj.m, obj.w
    tol = config.tol(L)
    x = mu_prev.atoms.copy()
    f, plan, _ = obj(x)
    f0 = f
    g = obj.gradient(x, plan)
    gmax = float(np.max(np.linalg.norm(g, axis=-1)))
    it = 0
    while gmax > tol and it < config.inner_max_iters:
        it += 1
        slope = float(w @ np.sum(g * g, axis=-1))
        alpha = config.tau
        for _ in range(ARMIJO_MAX_HALVINGS):
            x_new = m.exp(x, -alpha * g)
            f_new, plan_new, _ = obj(x_new)
            predicted = ARMIJO_C * alpha * slope
            if f_new <= f - predicted:
                break
            if predicted < 1e-14 * (1.0 + abs(f)):
                # decrease below round-off: accept only if stationarity improves
                g_new = obj.gradient(x_new, plan_new)
                if np.max(np.linalg.norm(g_new, axis=-1)) < gmax:
                    break
            alpha *= ARMIJO_BACKTRACK
        else:
            raise StagnationError(
                f"no decrease after {ARMIJO_MAX_HALVINGS} backtracks (|grad|={gmax:.3e}, tol={tol:.3e})"
            )
        x, f, plan = x_new, f_new, plan_new
        g = obj.gradient(x, plan)
        gmax = float(np.max(np.linalg.norm(g, axis=-1)))
    return x, f0, f, it, gmax, gmax <= tol


# -- grid oracle ----------------------------------------------------------------------------

def _local_offsets(dim, per_atom, radius):
    if dim == 1:
        return np.linspace(-radius, radius, per_atom)[:, None]
    side = max(2, int(math.isqrt(per_atom)))
    g = np.linspace(-radius, radius, side)
    return np.array(list(itertools.product(g, g)))


def _enumerate_vertices(unary, pair):
    """Exact minimum of ``sum_j unary[j][g_j] + sum_{i<j} pair[i,j][g_i, g_j]`` by enumeration."""
    n = len(unary)
    sizes = [u.size for u in unary]
    total = np.zeros(sizes)
    for j in range(n):
        shape = [1] * n
        shape[j] = sizes[j]
        total = total + unary[j].reshape(shape)
    for (i, j), p in pair.items():
        shape = [1] * n
        shape[i], shape[j] = sizes[i], sizes[j]
        total = total + p.reshape(shape)
    flat = int(np.argmin(total))
    return np.unravel_index(flat, sizes), float(total.flat[flat])


def _pairwise_frank_wolfe(wg, costs, blocks, masses, start, iters=2000):
    """Pairwise Frank-Wolfe over plans restricted to per-atom windows.

    ``wg`` is the interaction matrix on the union grid, ``blocks[j]`` the grid
    indices of window ``j``, ``costs[j]`` the per-unit transport cost there.
    """
    pis = [np.zeros(len(b)) for b in blocks]
    for j, s in enumerate(start):
        pis[j][s] = masses[j]

    def rho_of(pis):
        rho = np.zeros(wg.shape[0])
        for b, p in zip(blocks, pis):
            np.add.at(rho, b, p)
        return rho

    def value(pis):
        rho = rho_of(pis)
        return 0.5 * rho @ wg @ rho + sum(c @ p for c, p in zip(costs, pis))

    for _ in range(iters):
        rho = rho_of(pis)
        field_ = wg @ rho
        best_gap, best = 0.0, None
        for j, (b, c, p) in enumerate(zip(blocks, costs, pis)):
            grad = field_[b] + c
            t = int(np.argmin(grad))
            active = np.flatnonzero(p > 0)
            a = int(active[np.argmax(grad[active])])
            gap = (grad[a] - grad[t]) * p[a]
            if t != a and gap > best_gap:
                best_gap, best = gap, (j, t, a)
        if best is None or best_gap < 1e-15:
            break
        j, t, a = best
        b, c, p = blocks[j], costs[j], pis[j]
        grad = field_[b] + c
        slope = grad[t] - grad[a]
        curv = wg[b[t], b[t]] + wg[b[a], b[a]] - 2.0 * wg[b[t], b[a]]
        gmax = p[a]
        if curv > 0:
            gamma = min(gmax, -slope / curv)
        else:
            gamma = gmax
        p[t] += gamma
        p[a] -= gamma
        if p[a] < 1e-18:
            p[a] = 0.0
    return pis, value(pis)


def grid_oracle(mu_prev: DiscreteMeasure, spec: PotentialSpec, tau: float, L: float,
                grid_points: int = 200, levels: int | None = None, max_atoms: int = 4):
    """Oracle minimizer of the step objective over measures on local grids.

    Every transported mass element moves at most ``L tau`` in an exact step,
    so the plan column of atom ``j`` is restricted to a grid over the
    ``L tau``-ball around it.  Vertices (one grid point per atom) are
    enumerated exactly, then a pairwise Frank-Wolfe pass allows mass to split;
    the grid is re-centred and shrunk for ``levels`` refinements.

    Returns ``(measure, objective, split_gain)``.
    """
    if mu_prev.n > max_atoms:
        raise ValueError(f"grid oracle supports at most {max_atoms} atoms, got {mu_prev.n}")
    m = mu_prev.geometry
    n = mu_prev.n
    y, w = mu_prev.atoms, mu_prev.weights
    per_atom = max(2, grid_points // n)
    if levels is None:
        levels = 6 if m.dim == 1 else 24
    radius = L * tau
    centers = y.copy()
    best_obj, best_measure, split_gain = np.inf, None, 0.0
    for level in range(levels):
        offsets = _local_offsets(m.dim, per_atom, radius)
        spacing = 2 * radius / (int(round(len(offsets) ** (1 / m.dim))) - 1)
        grids = []
        for j in range(n):
            basis = m.tangent_basis(centers[j])
            v = offsets @ basis
            base = np.broadcast_to(centers[j], v.shape)
            pts = m.exp(base, m.to_tangent(base, v))
            # the exact minimizer keeps each mass element within L tau of its origin
            keep = m.distance(pts, y[j]) <= L * tau * (1 + 1e-12)
            pts = pts[keep] if np.any(keep) else centers[j][None, :]
            grids.append(pts)
        unary = [w[j] * m.distance(grids[j], y[j]) ** 2 / (2 * tau) for j in range(n)]
        pair = {(i, j): w[i] * w[j] * w_matrix(spec, m, grids[i], grids[j])
                for i in range(n) for j in range(i + 1, n)}
        choice, vert_obj = _enumerate_vertices(unary, pair)

        union = np.concatenate(grids)
        offsets_idx = np.cumsum([0] + [len(g) for g in grids])
        blocks = [np.arange(offsets_idx[j], offsets_idx[j + 1]) for j in range(n)]
        costs = [m.distance(grids[j], y[j]) ** 2 / (2 * tau) for j in range(n)]
        wg = w_matrix(spec, m, union, union)
        pis, fw_obj = _pairwise_frank_wolfe(wg, costs, blocks, w, choice)
        split_gain = max(split_gain, vert_obj - fw_obj)

        if fw_obj < best_obj:
            best_obj = fw_obj
            mass = np.zeros(len(union))
            for b, p in zip(blocks, pis):
                np.add.at(mass, b, p)
            keep = mass > 0
            best_measure = DiscreteMeasure(m.id, union[keep], mass[keep] / mass.sum(), merge_tol=0.0)
        centers = np.array([grids[j][choice[j]] for j in range(n)])
        radius = (2.0 if m.dim == 1 else 1.5) * spacing
    return best_measure, best_obj, split_gain


# -- steps and trajectories ---------------------------------------------------------------

def jko_step(mu_prev: DiscreteMeasure, spec: PotentialSpec, config: SchemeConfig,
             bounds: EnergyBounds | None = None):
    """One minimizing-movement step; returns ``(mu_next, dual, StepDiagnostics)``."""
    if delta_cut(mu_prev) <= 0:
        raise CutIncursionError("previous measure already meets the cut locus")
    if bounds is None:
        bounds = energy_bounds(spec, mu_prev.manifold)
    L = bounds.L
    m = mu_prev.geometry
    f_before = energy(spec, mu_prev)
    if config.solver is Solver.PLAN_GRADIENT_DESCENT:
        x, _, f, iters, gmax, converged = _plan_gradient_descent(mu_prev, spec, config, L)
        mu_next = DiscreteMeasure(m.id, x, mu_prev.weights)
        split_gain = 0.0
    else:
        mu_next, f, split_gain = grid_oracle(mu_prev, spec, config.tau, L, config.grid_points)
        iters, gmax, converged = 0, float("nan"), True
    dual = kantorovich_dual(mu_prev, mu_next)
    dist = m.pairwise_distance(mu_prev.atoms, mu_next.atoms)
    on = dual.plan > 0
    step_d2 = float(np.sqrt(max(0.0, np.sum(dual.plan * dist**2))))
    diag = StepDiagnostics(
        objective_before=f_before,
        objective=energy(spec, mu_next) + step_d2**2 / (2 * config.tau),
        energy=energy(spec, mu_next),
        step_d2=step_d2,
        max_displacement=float(np.max(dist[on])),
        iterations=iters,
        grad_norm=gmax,
        converged=converged,
        solver=config.solver.value,
        oracle_split_gain=split_gain,
    )
    return mu_next, dual, diag


def el_residual(mu_next: DiscreteMeasure, dual: KantorovichDual, spec: PotentialSpec, tau: float):
    """Per-atom Euler-Lagrange residual ``grad phi^c / tau + grad (W * mu_next)``.

    Returns ``(norms, findings)``: ``norms[i]`` is NaN where the c-transform is
    not differentiable, and ``findings`` lists ``(atom, message)`` for those.
    """
    norms = np.full(mu_next.n, np.nan)
    findings = []
    grad_w = grad_convolve(spec, mu_next, mu_next.atoms)
    for i, x in enumerate(mu_next.atoms):
        try:
            gc = grad_c_transform(dual, x)
        except (NondifferentiableError, CutLocusError) as exc:
            findings.append((i, str(exc)))
            continue
        norms[i] = float(np.linalg.norm(gc / tau + grad_w[i]))
    return norms, findings


@dataclass
class StepRecord:
    step: int
    time: float
    energy: float
    step_d2: float
    max_displacement: float
    delta: float
    el_residual: float
    iterations: int = 0
    converged: bool = True


@dataclass
class Trajectory:
    config: SchemeConfig
    spec: PotentialSpec
    bounds: EnergyBounds
    measures: list
    duals: list = field(default_factory=list)
    per_step: list = field(default_factory=list)
    status: str = "completed"
    guaranteed: bool = True

    @property
    def tau(self) -> float:
        return self.config.tau

    @property
    def manifold(self):
        return self.measures[0].manifold

    @property
    def n_steps(self) -> int:
        return len(self.measures) - 1

    @property
    def energies(self):
        return np.array([energy(self.spec, mu) for mu in self.measures])

    @property
    def step_distances(self):
        return np.array([r.step_d2 for r in self.per_step[1:]])

    def replace(self, **changes) -> "Trajectory":
        return replace(self, **changes)


def run_scheme(mu0: DiscreteMeasure, spec: PotentialSpec, config: SchemeConfig,
               check_assumptions: bool = True) -> Trajectory:
    """Iterate :func:`jko_step` for ``floor(T / tau)`` steps."""
    m = get_manifold(mu0.manifold)
    if check_assumptions:
        report = assumption_check(spec, m)
        if not report.passed:
            failed = [k for k, r in report.results.items() if not r.passed]
            raise ValueError(f"potential violates assumptions {failed}")
    bounds = energy_bounds(spec, m)
    delta0 = delta_cut(mu0)
    if delta0 <= 0:
        raise CutIncursionError("initial measure meets the cut locus")
    traj = Trajectory(config=config, spec=spec, bounds=bounds, measures=[mu0],
                      guaranteed=config.horizon_T < delta0 / (2 * bounds.L))
    traj.per_step.append(StepRecord(0, 0.0, energy(spec, mu0), 0.0, 0.0, delta0, 0.0))
    mu = mu0
    for k in range(config.n_steps):
        try:
            mu_next, dual, diag = jko_step(mu, spec, config, bounds)
        except (CutLocusError, StagnationError) as exc:
            exc.step = k
            exc.args = (f"step {k}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        norms, findings = el_residual(mu_next, dual, spec, config.tau)
        el = float(np.nanmax(norms)) if np.any(np.isfinite(norms)) else float("nan")
        delta = delta_cut(mu_next)
        traj.measures.append(mu_next)
        traj.duals.append(dual)
        traj.per_step.append(StepRecord(
            k + 1, (k + 1) * config.tau, diag.energy, diag.step_d2, diag.max_displacement,
            delta, el if not findings else float("nan"), diag.iterations, diag.converged,
        ))
        mu = mu_next
        if delta <= 2 * EPS_CUT:
            traj.status = "cut_incursion"
            break
    return traj


# -- interpolations -------------------------------------------------------------------------

def _bracket(traj: Trajectory, t: float) -> int:
    if not (0.0 <= t <= traj.config.horizon_T * (1 + 1e-13)):
        raise DomainError(f"time {t} outside [0, {traj.config.horizon_T}]")
    return min(step_index(t, traj.tau), traj.n_steps)


def interp_constant(traj: Trajectory, t: float) -> DiscreteMeasure:
    """Piecewise-constant interpolation: ``mu_k`` on ``[k tau, (k+1) tau)``."""
    return traj.measures[_bracket(traj, t)]


def interp_geodesic(traj: Trajectory, t: float) -> DiscreteMeasure:
    """Displacement interpolation along the optimal plan of the bracketing step.

    For ``t`` in ``[k tau, (k+1) tau)`` each plan cell ``(y_j, x_i)`` with
    ``y_j`` in ``mu_k`` and ``x_i`` in ``mu_{k+1}`` carries its mass to
    ``exp_{x_i}(s log_{x_i}(y_j))`` with ``s = ((k+1) tau - t) / tau``.
    """
    k = _bracket(traj, t)
    if k >= traj.n_steps:
        return traj.measures[-1]
    s = ((k + 1) * traj.tau - t) / traj.tau
    dual = traj.duals[k]
    m = get_manifold(traj.manifold)
    jj, ii = np.nonzero(dual.plan)
    x = dual.target.atoms[ii]
    y = dual.source.atoms[jj]
    pts = m.exp(x, s * m.log(x, y))
    mass = dual.plan[jj, ii]
    return DiscreteMeasure(m.id, pts, mass / mass.sum(), merge_tol=INTERP_MERGE_TOL)


def geodesic_velocity(traj: Trajectory, t: float):
    """Atoms, weights and velocities of the geodesic interpolation at time ``t``.

    Velocities are tangent at the interpolated atoms (the time derivative of
    ``exp_{x_i}(s log_{x_i} y_j)``); used by weak-form residuals.
    """
    k = _bracket(traj, t)
    m = get_manifold(traj.manifold)
    if k >= traj.n_steps:
        mu = traj.measures[-1]
        return mu.atoms, mu.weights, np.zeros_like(mu.atoms)
    s = ((k + 1) * traj.tau - t) / traj.tau
    dual = traj.duals[k]
    jj, ii = np.nonzero(dual.plan)
    x = dual.target.atoms[ii]
    y = dual.source.atoms[jj]
    v = m.log(x, y)
    pts = m.exp(x, s * v)
    # d/dt exp_x(s v) has speed |v| / tau and points from the current atom back towards x
    back = m.log(pts, x, eps_cut=0.0)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    nb = np.linalg.norm(back, axis=-1, keepdims=True)
    at_x = (nb == 0) & (nv > 0)
    direction = np.where(nb > 0, back / np.where(nb > 0, nb, 1.0), 0.0)
    direction = np.where(at_x, -v / np.where(nv > 0, nv, 1.0), direction)
    vel = (nv / traj.tau) * direction
    mass = dual.plan[jj, ii]
    return pts, mass / mass.sum(), vel

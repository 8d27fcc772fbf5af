"""Discrete probability measures on a manifold and exact optimal transport between them.

Transport problems are solved exactly with the network simplex of POT
(``ot.emd``); Kantorovich potentials are then re-selected inside the optimal
dual face so that off-support constraints are strict wherever possible, which
keeps discrete c-transforms differentiable on the plan support.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linprog

from .manifold import EPS_CUT, CutLocusError, DomainError, ManifoldId, get_manifold

for _backend in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")
import ot  # noqa: E402

MERGE_TOL = 1e-12
TIE_TOL = 1e-9
PLAN_ZERO = 1e-15
MAX_PRODUCT_ATOMS = 6


class NondifferentiableError(ValueError):
    """The c-transform has several minimizing atoms at the evaluation point."""

    def __init__(self, message, atoms=()):
        super().__init__(message)
        self.atoms = tuple(atoms)


class InstanceTooLargeError(ValueError):
    pass


class DiscreteMeasure:
    """Weighted atoms on a manifold; immutable.

    Atoms closer than ``merge_tol`` are merged (weights added, first
    coordinates kept) and zero weights are dropped.  Weights must sum to one
    within ``1e-9`` and are then renormalized exactly.
    """

    __slots__ = ("manifold", "atoms", "weights")

    def __init__(self, manifold, atoms, weights=None, merge_tol: float = MERGE_TOL):
        m = get_manifold(manifold)
        atoms = np.asarray(atoms, dtype=float)
        if m.id == ManifoldId.CIRCLE and atoms.ndim == 1:
            atoms = atoms[:, None]
        atoms = m.canonical(np.atleast_2d(atoms))
        n = atoms.shape[0]
        if n == 0:
            raise ValueError("a discrete measure needs at least one atom")
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.shape != (n,):
            raise ValueError(f"got {n} atoms but {w.size} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        keep = w > 0
        atoms, w = atoms[keep], w[keep]

        if atoms.shape[0] > 1:
            d = m.pairwise_distance(atoms, atoms)
            owner = np.arange(atoms.shape[0])
            for i in range(atoms.shape[0]):
                if owner[i] != i:
                    continue
                close = (d[i] <= merge_tol) & (owner == np.arange(atoms.shape[0]))
                close[:i + 1] = False
                owner[close] = i
            reps = np.flatnonzero(owner == np.arange(atoms.shape[0]))
            merged = np.zeros(reps.size)
            np.add.at(merged, np.searchsorted(reps, owner), w)
            atoms, w = atoms[reps], merged

        w = w / w.sum()
        atoms.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "manifold", m.id)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, key, value):
        raise AttributeError("DiscreteMeasure is immutable")

    def __repr__(self):
        return f"DiscreteMeasure({self.manifold.value}, n={self.n})"

    @property
    def n(self) -> int:
        return self.atoms.shape[0]

    @property
    def geometry(self):
        return get_manifold(self.manifold)

    @classmethod
    def dirac(cls, manifold, point):
        return cls(manifold, np.atleast_2d(np.asarray(point, dtype=float)), [1.0])

    def support_diameter(self) -> float:
        return float(np.max(self.geometry.pairwise_distance(self.atoms, self.atoms)))

    def to_record(self) -> dict:
        return {
            "manifold": self.manifold.value,
            "atoms": [{"coords": a.tolist(), "weight": float(w)}
                      for a, w in zip(self.atoms, self.weights)],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "DiscreteMeasure":
        atoms = [a["coords"] for a in rec["atoms"]]
        weights = [a["weight"] for a in rec["atoms"]]
        return cls(rec["manifold"], atoms, weights)


def _same_manifold(mu: DiscreteMeasure, nu: DiscreteMeasure):
    if mu.manifold != nu.manifold:
        raise DomainError(f"measures live on different manifolds: {mu.manifold.value} vs {nu.manifold.value}")
    return get_manifold(mu.manifold)


# -- exact transport ---------------------------------------------------------------

def solve_transport(a, b, cost):
    """Exact discrete OT; returns ``(plan, total_cost, u, v)`` with ``u_i + v_j <= cost_ij``."""
    cost = np.ascontiguousarray(cost, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    b = b * (a.sum() / b.sum())
    plan, log = ot.emd(a, b, cost, numItermax=1_000_000, log=True)
    if log["result_code"] != 1:
        raise RuntimeError(f"network simplex failed: {log['warning']}")
    plan = np.where(plan > PLAN_ZERO, plan, 0.0)
    return plan, float(np.sum(plan * cost)), np.asarray(log["u"]), np.asarray(log["v"])


@dataclass(frozen=True, eq=False)
class TransportPlan:
    source: DiscreteMeasure
    target: DiscreteMeasure
    matrix: np.ndarray
    cost_p: int
    cost: float

    def marginal_error(self) -> float:
        return float(max(np.max(np.abs(self.matrix.sum(1) - self.source.weights)),
                         np.max(np.abs(self.matrix.sum(0) - self.target.weights))))

    def support(self):
        return np.argwhere(self.matrix > 0)


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2):
    """Exact ``d_p(mu, nu)`` for ``p`` in {1, 2}; returns ``(distance, TransportPlan)``."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    m = _same_manifold(mu, nu)
    cost = m.pairwise_distance(mu.atoms, nu.atoms) ** p
    plan, total, _, _ = solve_transport(mu.weights, nu.weights, cost)
    total = max(total, 0.0)
    return total ** (1.0 / p), TransportPlan(mu, nu, plan, p, total)


def d2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return wasserstein(mu, nu, 2)[0]


def wasserstein_ordering_check(mu: DiscreteMeasure, nu: DiscreteMeasure) -> bool:
    """``d_1 <= d_2`` (up to 1e-10)."""
    return wasserstein(mu, nu, 1)[0] <= wasserstein(mu, nu, 2)[0] + 1e-10


def matching_brute_force(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2) -> float:
    """Best permutation matching cost for equal-size, equal-weight supports (oracle)."""
    if mu.n != nu.n or not (np.allclose(mu.weights, 1 / mu.n) and np.allclose(nu.weights, 1 / nu.n)):
        raise ValueError("brute-force matching needs equal-size uniform measures")
    cost = _same_manifold(mu, nu).pairwise_distance(mu.atoms, nu.atoms) ** p
    rows = np.arange(mu.n)
    best = min(cost[rows, list(perm)].sum() for perm in permutations(range(mu.n)))
    return float(best / mu.n) ** (1.0 / p)


# -- Kantorovich duality ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KantorovichDual:
    """Optimal potentials for the cost ``d^2/2``.

    ``phi`` lives on the source atoms, ``phi_c`` on the target atoms and equals
    the discrete c-transform of ``phi``.  Normalized by ``sum_i w_i phi_i = 0``.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    phi: np.ndarray
    phi_c: np.ndarray
    plan: np.ndarray

    def value(self) -> float:
        return float(self.source.weights @ self.phi + self.target.weights @ self.phi_c)

    def cost_matrix(self):
        m = get_manifold(self.source.manifold)
        return 0.5 * m.pairwise_distance(self.source.atoms, self.target.atoms) ** 2

    def feasibility_violation(self) -> float:
        slack = self.cost_matrix() - self.phi[:, None] - self.phi_c[None, :]
        return float(max(0.0, -slack.min()))

    def slackness_violation(self) -> float:
        slack = self.cost_matrix() - self.phi[:, None] - self.phi_c[None, :]
        on = self.plan > 0
        return float(np.max(np.abs(slack[on]))) if np.any(on) else 0.0


def _strict_dual(cost, support, u0):
    """Re-select a dual in the optimal face with off-support slacks bounded away from zero.

    First maximizes the smallest off-support slack (capped); when some slack
    is forced to zero, falls back to maximizing the sum of capped slacks so
    that every pair that can be slack is.
    """
    n, m = cost.shape
    on = np.zeros_like(cost, dtype=bool)
    on[tuple(support.T)] = True
    off = np.argwhere(~on)
    if len(off) == 0:
        return None
    cap = 1e-3 * (1.0 + float(np.max(np.abs(cost))))
    a_eq = np.zeros((len(support) + 1, n + m))
    b_eq = np.zeros(len(support) + 1)
    for r, (i, j) in enumerate(support):
        a_eq[r, i] = a_eq[r, n + j] = 1.0
        b_eq[r] = cost[i, j]
    a_eq[-1, 0] = 1.0
    b_eq[-1] = u0[0]
    b_ub = cost[tuple(off.T)]
    free = [(None, None)] * (n + m)

    # max t  s.t.  u_i + v_j + t <= C_ij off the support
    a_ub = np.zeros((len(off), n + m + 1))
    for r, (i, j) in enumerate(off):
        a_ub[r, i] = a_ub[r, n + j] = a_ub[r, -1] = 1.0
    c = np.zeros(n + m + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=np.hstack([a_eq, np.zeros((len(a_eq), 1))]),
                  b_eq=b_eq, bounds=free + [(0.0, cap)], method="highs")
    if res.status == 0 and res.x[-1] > TIE_TOL:
        return res.x[:n]

    a_ub = np.zeros((len(off), n + m + len(off)))
    for r, (i, j) in enumerate(off):
        a_ub[r, i] = a_ub[r, n + j] = a_ub[r, n + m + r] = 1.0
    c = np.zeros(n + m + len(off))
    c[n + m:] = -1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=np.hstack([a_eq, np.zeros((len(a_eq), len(off)))]),
                  b_eq=b_eq, bounds=free + [(0.0, cap)] * len(off), method="highs")
    if res.status != 0:
        return None
    return res.x[:n]


def kantorovich_dual(mu: DiscreteMeasure, nu: DiscreteMeasure, plan: np.ndarray | None = None,
                     strict: bool = True) -> KantorovichDual:
    """Optimal dual pair of the ``p = 2`` problem with cost ``d^2/2`` from ``mu`` to ``nu``."""
    m = _same_manifold(mu, nu)
    cost = 0.5 * m.pairwise_distance(mu.atoms, nu.atoms) ** 2
    p, _, u, _ = solve_transport(mu.weights, nu.weights, cost)
    if plan is None:
        plan = p
    if strict and cost.size > 1:
        refined = _strict_dual(cost, np.argwhere(plan > 0), u)
        if refined is not None:
            u = refined
    # exact c-transform keeps feasibility free of solver tolerances
    phi_c = np.min(cost - u[:, None], axis=0)
    # tighten phi back onto the support of the plan
    phi = np.min(cost - phi_c[None, :], axis=1)
    shift = float(mu.weights @ phi)
    return KantorovichDual(mu, nu, phi - shift, phi_c + shift, plan)


def c_transform(phi, measure: DiscreteMeasure, x):
    """``min_z d(x, z)^2/2 - phi(z)`` over the atoms of ``measure``; returns ``(value, argmin)``."""
    m = get_manifold(measure.manifold)
    vals = 0.5 * m.distance(np.asarray(x, dtype=float)[None, :], measure.atoms) ** 2 - np.asarray(phi)
    j = int(np.argmin(vals))
    return float(vals[j]), j


def grad_c_transform(dual: KantorovichDual, x, tie_tol: float = TIE_TOL, eps_cut: float = EPS_CUT):
    """Gradient ``-log_x(z*)`` of the c-transform of ``dual.phi`` at ``x``.

    Raises :class:`NondifferentiableError` when another atom attains the
    minimum within ``tie_tol`` and :class:`CutLocusError` when the minimizer
    is at the cut locus of ``x``.
    """
    m = get_manifold(dual.source.manifold)
    x = np.asarray(x, dtype=float)
    vals = 0.5 * m.distance(x[None, :], dual.source.atoms) ** 2 - dual.phi
    j = int(np.argmin(vals))
    tied = np.flatnonzero(vals <= vals[j] + tie_tol)
    if tied.size > 1:
        raise NondifferentiableError(
            f"c-transform minimum attained by atoms {tied.tolist()} (tolerance {tie_tol:g})",
            atoms=tied.tolist(),
        )
    z = dual.source.atoms[j]
    if m.cut_pair_distance(x, z) <= eps_cut:
        raise CutLocusError("c-transform minimizer lies at the cut locus", x=x, y=z)
    return -m.log(x, z, eps_cut=eps_cut)


# -- Kantorovich-Rubinstein and product measures ------------------------------------------

def kr_witness(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """1-Lipschitz witness ``psi`` attaining ``d_1(mu, nu) = int psi d(mu - nu)``.

    Returns ``(d1, psi)`` where ``psi`` maps an array of points to values.
    """
    m = _same_manifold(mu, nu)
    cost = m.pairwise_distance(mu.atoms, nu.atoms)
    _, total, u, v = solve_transport(mu.weights, nu.weights, cost)
    atoms = nu.atoms.copy()

    def psi(points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.min(m.pairwise_distance(points, atoms) - v[None, :], axis=1)

    return total, psi


def product_contraction_check(mu: DiscreteMeasure, nu: DiscreteMeasure,
                              max_atoms: int = MAX_PRODUCT_ATOMS):
    """``(d_1(mu x mu, nu x nu), 2 d_1(mu, nu), inequality holds)`` with the sum metric on M x M."""
    if mu.n > max_atoms or nu.n > max_atoms:
        raise InstanceTooLargeError(f"product LP limited to {max_atoms} atoms per measure")
    m = _same_manifold(mu, nu)
    d = m.pairwise_distance(mu.atoms, nu.atoms)
    n, k = d.shape
    cost = (d[:, None, :, None] + d[None, :, None, :]).reshape(n * n, k * k)
    a = np.outer(mu.weights, mu.weights).ravel()
    b = np.outer(nu.weights, nu.weights).ravel()
    _, lhs, _, _ = solve_transport(a, b, cost)
    rhs = 2.0 * wasserstein(mu, nu, 1)[0]
    return lhs, rhs, bool(lhs <= rhs + 1e-9)

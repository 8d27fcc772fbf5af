"""Closed-form Riemannian geometry on the unit circle, unit 2-sphere and flat 2-torus.

Points are stored as float arrays with a trailing coordinate axis:

* circle: one angle in ``[0, 2*pi)``, shape ``(..., 1)``;
* sphere2: a unit vector of R^3, shape ``(..., 3)``;
* torus2: a pair in ``[0, 1)^2`` (circumference-one factors), shape ``(..., 2)``.

Tangent vectors use the same layout (chart coordinates for the circle and
the torus, ambient coordinates for the sphere), so the Riemannian inner
product is the Euclidean dot product of the stored components in all three
cases.  Every method broadcasts over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

#: Pairs closer than this to the cut locus are treated as lying on it.
EPS_CUT = 1e-6


class DomainError(ValueError):
    """Raised for arguments outside an operation's domain."""


class CutLocusError(ValueError):
    """Raised when a geodesic quantity is requested at (or near) the cut locus.

    ``x`` and ``y`` hold the first offending pair and ``index`` its position in
    the broadcast input (``None`` for scalar inputs).
    """

    def __init__(self, message, x=None, y=None, index=None):
        super().__init__(message)
        self.x = x
        self.y = y
        self.index = index


class ManifoldId(str, Enum):
    CIRCLE = "circle"
    SPHERE2 = "sphere2"
    TORUS2 = "torus2"


def _wrap_centered(delta, period):
    """Map ``delta`` into ``[-period/2, period/2)``."""
    return (delta + 0.5 * period) % period - 0.5 * period


def _fold(delta, period):
    """``|delta|`` reduced to ``[0, period/2]``; exactly symmetric under ``delta -> -delta``."""
    a = np.mod(np.abs(delta), period)
    return np.minimum(a, period - a)


def _mod(x, period):
    out = np.mod(x, period)
    # np.mod can round tiny negatives up to exactly `period`
    return np.where(out >= period, 0.0, out)


class Manifold:
    """Base class; concrete subclasses provide the closed forms."""

    id: ManifoldId
    dim: int
    coord_dim: int
    diameter: float

    def __repr__(self):
        return f"{type(self).__name__}()"

    # -- construction -------------------------------------------------
    def canonical(self, points):
        raise NotImplementedError

    def to_tangent(self, x, v):
        """Return ``v`` as a tangent vector at ``x`` (projection where needed)."""
        return np.asarray(v, dtype=float) + 0.0 * np.asarray(x, dtype=float)

    def check_tangent(self, x, v, atol=1e-10):
        return np.asarray(v, dtype=float)

    # -- metric -------------------------------------------------------
    def inner(self, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def norm(self, v):
        return np.sqrt(self.inner(v, v))

    def distance(self, x, y):
        raise NotImplementedError

    def pairwise_distance(self, xs, ys):
        """Distance matrix between two point sets of shapes (n, k) and (m, k)."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        return self.distance(xs[:, None, :], ys[None, :, :])

    def exp(self, x, v):
        raise NotImplementedError

    def _log(self, x, y):
        raise NotImplementedError

    def log(self, x, y, eps_cut=EPS_CUT):
        """Inverse exponential map; raises :class:`CutLocusError` near the cut locus."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        margin = self.cut_pair_distance(x, y)
        bad = margin <= eps_cut
        if np.any(bad):
            xb, yb = np.broadcast_arrays(x, y)
            if np.ndim(bad) == 0:
                index, xo, yo, gap = None, xb, yb, float(margin)
            else:
                index = tuple(int(i) for i in np.argwhere(bad)[0])
                xo, yo, gap = xb[index], yb[index], float(margin[index])
            raise CutLocusError(
                f"log_map undefined: pair within {eps_cut:g} of the cut locus "
                f"(cut_pair_distance={gap:.3e})",
                x=np.array(xo), y=np.array(yo), index=index,
            )
        return self._log(x, y)

    def cut_pair_distance(self, x, y):
        raise NotImplementedError

    def geodesic(self, x, y, s):
        """Point at fraction ``s`` of the minimizing geodesic from ``x`` to ``y``."""
        v = self.log(x, y)
        return self.exp(x, np.asarray(s, dtype=float)[..., None] * v)

    def tangent_basis(self, x):
        """Orthonormal basis of T_x as an array of shape (dim, coord_dim)."""
        raise NotImplementedError

    # -- sampling -----------------------------------------------------
    def random_point(self, rng, size=None):
        raise NotImplementedError

    def random_cap(self, rng, n, center, radius):
        """``n`` points at geodesic distance < ``radius`` from ``center``."""
        center = self.canonical(center)
        basis = self.tangent_basis(center)
        if self.dim == 1:
            r = rng.uniform(-radius, radius, size=n)
            v = r[:, None] * basis[0]
        else:
            r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
            ang = rng.uniform(0.0, 2 * np.pi, size=n)
            v = (r * np.cos(ang))[:, None] * basis[0] + (r * np.sin(ang))[:, None] * basis[1]
        return self.exp(np.broadcast_to(center, v.shape), v)


class Circle(Manifold):
    id = ManifoldId.CIRCLE
    dim = 1
    coord_dim = 1
    diameter = np.pi
    period = 2 * np.pi

    def canonical(self, points):
        p = np.asarray(points, dtype=float)
        if p.ndim == 0:
            p = p[None]
        if p.shape[-1] != 1:
            raise DomainError(f"circle points need a trailing axis of length 1, got {p.shape}")
        return _mod(p, self.period)

    def distance(self, x, y):
        return _fold(np.asarray(y) - np.asarray(x), self.period)[..., 0]

    def exp(self, x, v):
        return _mod(np.asarray(x, dtype=float) + np.asarray(v, dtype=float), self.period)

    def _log(self, x, y):
        return _wrap_centered(y - x, self.period)

    def cut_pair_distance(self, x, y):
        return np.pi - self.distance(x, y)

    def tangent_basis(self, x):
        return np.ones((1, 1))

    def random_point(self, rng, size=None):
        shape = (1,) if size is None else (size, 1)
        return rng.uniform(0.0, self.period, size=shape)


class Torus2(Manifold):
    """Flat torus R^2 / Z^2 (each factor a circle of circumference one)."""

    id = ManifoldId.TORUS2
    dim = 2
    coord_dim = 2
    diameter = np.sqrt(2.0) / 2.0

    def canonical(self, points):
        p = np.asarray(points, dtype=float)
        if p.shape[-1:] != (2,):
            raise DomainError(f"torus points need a trailing axis of length 2, got {p.shape}")
        return _mod(p, 1.0)

    def distance(self, x, y):
        delta = _fold(np.asarray(y) - np.asarray(x), 1.0)
        return np.sqrt(np.sum(delta**2, axis=-1))

    def exp(self, x, v):
        return _mod(np.asarray(x, dtype=float) + np.asarray(v, dtype=float), 1.0)

    def _log(self, x, y):
        return _wrap_centered(y - x, 1.0)

    def cut_pair_distance(self, x, y):
        return np.min(0.5 - _fold(np.asarray(y) - np.asarray(x), 1.0), axis=-1)

    def tangent_basis(self, x):
        return np.eye(2)

    def random_point(self, rng, size=None):
        shape = (2,) if size is None else (size, 2)
        return rng.uniform(0.0, 1.0, size=shape)


class Sphere2(Manifold):
    id = ManifoldId.SPHERE2
    dim = 2
    coord_dim = 3
    diameter = np.pi

    def canonical(self, points):
        p = np.asarray(points, dtype=float)
        if p.shape[-1:] != (3,):
            raise DomainError(f"sphere points need a trailing axis of length 3, got {p.shape}")
        nrm = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(nrm < 1e-12):
            raise DomainError("cannot normalize the zero vector onto the sphere")
        return p / nrm

    def to_tangent(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - np.sum(v * x, axis=-1, keepdims=True) * x

    def check_tangent(self, x, v, atol=1e-10):
        v = np.asarray(v, dtype=float)
        if np.any(np.abs(np.sum(v * np.asarray(x), axis=-1)) > atol):
            raise DomainError("vector is not tangent to the sphere at its base point")
        return v

    def distance(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        cross = np.linalg.norm(np.cross(x, y), axis=-1)
        return np.arctan2(cross, np.sum(x * y, axis=-1))

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(nv > 0, nv, 1.0)
        out = np.cos(nv) * x + np.where(nv > 0, np.sin(nv) / safe, 1.0) * v
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def _log(self, x, y):
        dot = np.sum(x * y, axis=-1, keepdims=True)
        u = y - dot * x
        nu = np.linalg.norm(u, axis=-1, keepdims=True)
        theta = np.arctan2(nu, dot)
        scale = np.where(nu > 0, theta / np.where(nu > 0, nu, 1.0), 0.0)
        return scale * u

    def cut_pair_distance(self, x, y):
        return np.pi - self.distance(x, y)

    def tangent_basis(self, x):
        x = self.canonical(x)
        e = np.zeros(3)
        e[int(np.argmin(np.abs(x)))] = 1.0
        b1 = e - np.dot(e, x) * x
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(x, b1)
        return np.stack([b1, b2])

    def random_point(self, rng, size=None):
        shape = (3,) if size is None else (size, 3)
        return self.canonical(rng.normal(size=shape))


CIRCLE = Circle()
SPHERE2 = Sphere2()
TORUS2 = Torus2()

_REGISTRY = {m.id: m for m in (CIRCLE, SPHERE2, TORUS2)}


def get_manifold(which) -> Manifold:
    """Look up a manifold by :class:`ManifoldId`, its string value, or pass one through."""
    if isinstance(which, Manifold):
        return which
    try:
        return _REGISTRY[ManifoldId(which)]
    except ValueError:
        valid = ", ".join(m.value for m in ManifoldId)
        raise DomainError(f"unknown manifold {which!r}; expected one of {valid}") from None


# -- single-point typed interface -------------------------------------------

@dataclass(frozen=True)
class ManifoldPoint:
    """A point tagged with its manifold; coordinates are canonicalized on construction."""

    manifold: ManifoldId
    coords: np.ndarray = field(repr=True)

    def __post_init__(self):
        object.__setattr__(self, "manifold", ManifoldId(self.manifold))
        c = get_manifold(self.manifold).canonical(self.coords)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __eq__(self, other):
        return (
            isinstance(other, ManifoldPoint)
            and self.manifold == other.manifold
            and np.array_equal(self.coords, other.coords)
        )

    def __hash__(self):
        return hash((self.manifold, self.coords.tobytes()))


@dataclass(frozen=True)
class TangentVector:
    base: ManifoldPoint
    components: np.ndarray

    def __post_init__(self):
        m = get_manifold(self.base.manifold)
        comp = np.asarray(self.components, dtype=float).reshape(m.coord_dim)
        comp = m.check_tangent(self.base.coords, comp)
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def _same(x: ManifoldPoint, y: ManifoldPoint) -> Manifold:
    if x.manifold != y.manifold:
        raise DomainError(f"points live on different manifolds: {x.manifold.value} vs {y.manifold.value}")
    return get_manifold(x.manifold)


def distance(x: ManifoldPoint, y: ManifoldPoint) -> float:
    return float(_same(x, y).distance(x.coords, y.coords))


def exp_map(x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    m = _same(x, v.base)
    return ManifoldPoint(x.manifold, m.exp(x.coords, v.components))


def log_map(x: ManifoldPoint, y: ManifoldPoint, eps_cut: float = EPS_CUT) -> TangentVector:
    m = _same(x, y)
    return TangentVector(x, m.log(x.coords, y.coords, eps_cut=eps_cut))


def cut_pair_distance(x: ManifoldPoint, y: ManifoldPoint) -> float:
    return float(_same(x, y).cut_pair_distance(x.coords, y.coords))

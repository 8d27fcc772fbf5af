"""Intrinsic interaction potentials ``W(x, y) = h(d(x, y)**2)``.

A potential is described by its radial profile ``h`` on squared distances.
Three families are provided:

* :class:`PowerLaw` -- ``h(s) = a * s**q`` with ``q >= 1``;
* :class:`SmoothedPower` -- ``h(s) = a * ((s + eps)**q - eps**q)``;
* :class:`Tabulated` -- cubic Hermite interpolation of sampled ``h`` and ``h'``.

The monotonicity threshold ``r_h`` is expressed in squared-distance units,
i.e. ``h`` is required to be non-decreasing on ``[r_h, diam(M)**2]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .manifold import EPS_CUT, CutLocusError, get_manifold

ASSUMPTION_GRID = 10_000


class PotentialSpec:
    """Base class for radial profiles; subclasses implement ``h`` and ``dh``."""

    family: str = ""
    r_h: float = 0.0

    def h(self, s):
        raise NotImplementedError

    def dh(self, s):
        raise NotImplementedError

    def lip_h(self, manifold) -> float:
        """Lipschitz constant of ``h`` on ``[0, diam(M)**2]``."""
        raise NotImplementedError

    def to_record(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_record(rec: dict) -> "PotentialSpec":
        rec = dict(rec)
        family = rec.pop("family", None)
        try:
            cls = _FAMILIES[family]
        except KeyError:
            raise ValueError(
                f"unknown potential family {family!r}; expected one of {sorted(_FAMILIES)}"
            ) from None
        return cls._from_fields(rec)


@dataclass(frozen=True)
class PowerLaw(PotentialSpec):
    q: float = 1.0
    a: float = 1.0
    r_h: float = 0.0
    family = "power_law"

    def __post_init__(self):
        if not self.q >= 1:
            raise ValueError(f"PowerLaw exponent must satisfy q >= 1, got {self.q}")
        if not self.a > 0:
            raise ValueError(f"PowerLaw coefficient must be positive, got {self.a}")

    def h(self, s):
        return self.a * np.power(s, self.q)

    def dh(self, s):
        if self.q == 1:
            return np.full_like(np.asarray(s, dtype=float), self.a)
        return self.a * self.q * np.power(s, self.q - 1)

    def lip_h(self, manifold) -> float:
        diam = get_manifold(manifold).diameter
        return float(self.a * self.q * diam ** (2 * (self.q - 1)))

    def to_record(self):
        return {"family": self.family, "q": self.q, "a": self.a, "r_h": self.r_h}

    @classmethod
    def _from_fields(cls, rec):
        return cls(**{k: float(v) for k, v in rec.items()})


@dataclass(frozen=True)
class SmoothedPower(PotentialSpec):
    q: float = 1.0
    a: float = 1.0
    smoothing: float = 0.1
    r_h: float = 0.0
    family = "smoothed_power"

    def __post_init__(self):
        if not self.q >= 1 or not self.a > 0 or not self.smoothing > 0:
            raise ValueError("SmoothedPower needs q >= 1, a > 0 and smoothing > 0")

    def h(self, s):
        e = self.smoothing
        return self.a * (np.power(np.asarray(s, dtype=float) + e, self.q) - e**self.q)

    def dh(self, s):
        return self.a * self.q * np.power(np.asarray(s, dtype=float) + self.smoothing, self.q - 1)

    def lip_h(self, manifold) -> float:
        diam = get_manifold(manifold).diameter
        return float(self.a * self.q * (diam**2 + self.smoothing) ** (self.q - 1))

    def to_record(self):
        return {"family": self.family, "q": self.q, "a": self.a,
                "smoothing": self.smoothing, "r_h": self.r_h}

    @classmethod
    def _from_fields(cls, rec):
        return cls(**{k: float(v) for k, v in rec.items()})


@dataclass(frozen=True, eq=False)
class Tabulated(PotentialSpec):
    """Profile given by samples of ``h`` and ``h'`` on an increasing grid of squared distances."""

    s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    derivatives: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r_h: float = 0.0
    family = "tabulated"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        d = np.asarray(self.derivatives, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.shape != d.shape or s.size < 2:
            raise ValueError("Tabulated needs 1-d grids of equal length >= 2")
        if s[0] != 0.0 or np.any(np.diff(s) <= 0):
            raise ValueError("Tabulated grid must start at 0 and be strictly increasing")
        for name, arr in (("s", s), ("values", v), ("derivatives", d)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_spline", CubicHermiteSpline(s, v, d, extrapolate=False))

    @classmethod
    def from_function(cls, h, dh, s_max, n=257, r_h=0.0):
        s = np.linspace(0.0, s_max, n)
        return cls(s=s, values=h(s), derivatives=dh(s), r_h=r_h)

    def _check_range(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > self.s[-1] * (1 + 1e-12)) or np.any(s < 0):
            raise ValueError(f"argument outside tabulated range [0, {self.s[-1]}]")
        return np.clip(s, 0.0, self.s[-1])

    def h(self, s):
        return self._spline(self._check_range(s))

    def dh(self, s):
        return self._spline.derivative()(self._check_range(s))

    def lip_h(self, manifold) -> float:
        diam = get_manifold(manifold).diameter
        grid = np.linspace(0.0, min(diam**2, self.s[-1]), 20_001)
        return float(np.max(np.abs(self.dh(grid))))

    def to_record(self):
        return {"family": self.family, "s": self.s.tolist(), "values": self.values.tolist(),
                "derivatives": self.derivatives.tolist(), "r_h": self.r_h}

    @classmethod
    def _from_fields(cls, rec):
        return cls(s=np.asarray(rec["s"], float), values=np.asarray(rec["values"], float),
                   derivatives=np.asarray(rec["derivatives"], float),
                   r_h=float(rec.get("r_h", 0.0)))


_FAMILIES = {c.family: c for c in (PowerLaw, SmoothedPower, Tabulated)}


# -- evaluation -----------------------------------------------------------------

def w_eval(spec: PotentialSpec, manifold, x, y):
    """``W(x, y) = h(d(x, y)**2)``; broadcasts over leading axes."""
    d = get_manifold(manifold).distance(x, y)
    return spec.h(d * d)


def w_matrix(spec: PotentialSpec, manifold, xs, ys):
    d = get_manifold(manifold).pairwise_distance(xs, ys)
    return spec.h(d * d)


def lipschitz_L(spec: PotentialSpec, manifold) -> float:
    """Global Lipschitz constant ``2 lip(h) diam(M)`` of ``W`` in each argument."""
    m = get_manifold(manifold)
    return 2.0 * spec.lip_h(m) * m.diameter


def energy(spec: PotentialSpec, mu) -> float:
    """Interaction energy ``1/2 sum_ij w_i w_j W(x_i, x_j)``."""
    wm = w_matrix(spec, mu.manifold, mu.atoms, mu.atoms)
    return float(0.5 * mu.weights @ wm @ mu.weights)


def convolve(spec: PotentialSpec, mu, x):
    """``(W * mu)(x) = sum_j w_j W(x, x_j)`` at one point or an array of points."""
    m = get_manifold(mu.manifold)
    x = np.asarray(x, dtype=float)
    d = m.distance(x[..., None, :], mu.atoms)
    return spec.h(d * d) @ mu.weights


def grad_convolve(spec: PotentialSpec, mu, x, eps_cut: float = EPS_CUT):
    """Riemannian gradient of ``W * mu`` at ``x`` (one point or an array of points).

    Each atom contributes ``w_j h'(d^2) (-2 log_x(x_j))``; an atom within
    ``eps_cut`` of the cut locus of ``x`` raises :class:`CutLocusError` whose
    ``atom`` attribute is the offending atom index.
    """
    m = get_manifold(mu.manifold)
    x = np.asarray(x, dtype=float)
    xb = x[..., None, :]
    margin = m.cut_pair_distance(xb, mu.atoms)
    bad = margin <= eps_cut
    if np.any(bad):
        where = np.argwhere(bad)[0]
        atom = int(where[-1])
        err = CutLocusError(
            f"atom {atom} lies within {eps_cut:g} of the cut locus of the evaluation point",
            x=np.array(np.broadcast_to(x, xb.shape[:-2] + x.shape[-1:])[tuple(where[:-1])]),
            y=mu.atoms[atom], index=tuple(int(i) for i in where),
        )
        err.atom = atom
        raise err
    v = m.log(xb, mu.atoms, eps_cut=0.0)
    d2 = np.sum(v * v, axis=-1)
    coef = spec.dh(d2) * mu.weights
    return -2.0 * np.sum(coef[..., None] * v, axis=-2)


# -- constants and assumption checks ------------------------------------------------

@dataclass(frozen=True)
class EnergyBounds:
    L: float
    k_low: float


def energy_bounds(spec: PotentialSpec, manifold, n: int = ASSUMPTION_GRID) -> EnergyBounds:
    """Lipschitz constant and a certified lower bound of ``W`` over ``M x M``.

    ``W`` only depends on the distance ``r in [0, diam]`` and is ``L``-Lipschitz
    in ``r``, so the grid minimum minus ``L * spacing`` bounds it from below.
    """
    m = get_manifold(manifold)
    L = lipschitz_L(spec, m)
    r = np.linspace(0.0, m.diameter, n)
    k_low = float(np.min(spec.h(r * r)) - L * (r[1] - r[0]))
    return EnergyBounds(L=L, k_low=k_low)


@dataclass
class AssumptionResult:
    name: str
    passed: bool
    worst_point: float | None = None
    worst_value: float = 0.0
    detail: str = ""


@dataclass
class AssumptionReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, key) -> AssumptionResult:
        return self.results[key]


def assumption_check(spec: PotentialSpec, manifold, n: int = ASSUMPTION_GRID,
                     fd_rtol: float = 1e-3, jump_rtol: float = 1e-2) -> AssumptionReport:
    """Numerical audit of the standing assumptions on ``h`` over ``[0, diam**2]``.

    * W0: ``h(0) == 0`` exactly;
    * W1: ``h'`` finite, matching central differences of ``h`` and free of jumps
      on an ``n``-point grid;
    * W2: ``h`` non-decreasing on grid points ``>= r_h``.
    """
    m = get_manifold(manifold)
    s = np.linspace(0.0, m.diameter**2, n)
    ds = s[1] - s[0]
    h = np.asarray(spec.h(s), dtype=float)
    dh = np.asarray(spec.dh(s), dtype=float)
    results = {}

    h0 = float(h[0])
    results["W0"] = AssumptionResult("W0", h0 == 0.0, 0.0, abs(h0), f"h(0) = {h0!r}")

    if not np.all(np.isfinite(dh)) or not np.all(np.isfinite(h)):
        i = int(np.argmin(np.isfinite(dh) & np.isfinite(h)))
        results["W1"] = AssumptionResult("W1", False, float(s[i]), np.inf, "non-finite h or h'")
    else:
        scale = 1.0 + float(np.max(np.abs(dh)))
        fd = (h[2:] - h[:-2]) / (2 * ds)
        fd_err = np.abs(fd - dh[1:-1])
        jumps = np.abs(np.diff(dh))
        i_fd = int(np.argmax(fd_err))
        i_jump = int(np.argmax(jumps))
        fd_ok = fd_err[i_fd] <= fd_rtol * scale
        jump_ok = jumps[i_jump] <= jump_rtol * scale
        if not fd_ok:
            worst = AssumptionResult("W1", False, float(s[i_fd + 1]), float(fd_err[i_fd]),
                                     "h' disagrees with finite differences of h")
        elif not jump_ok:
            worst = AssumptionResult("W1", False, float(s[i_jump + 1]), float(jumps[i_jump]),
                                     "h' jumps between neighbouring grid points")
        else:
            worst = AssumptionResult("W1", True, float(s[i_fd + 1]), float(fd_err[i_fd]), "")
        results["W1"] = worst

    tail = s >= spec.r_h
    drops = -np.diff(h)
    drops[~tail[:-1]] = -np.inf
    i = int(np.argmax(drops))
    worst_drop = float(drops[i]) if np.isfinite(drops[i]) else 0.0
    ok = worst_drop <= 1e-12 * (1.0 + float(np.max(np.abs(h))))
    results["W2"] = AssumptionResult(
        "W2", ok, float(s[i + 1]), max(worst_drop, 0.0),
        "" if ok else "h decreases beyond r_h",
    )
    return AssumptionReport(results)

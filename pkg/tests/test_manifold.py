import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from manifold_jko.manifold import (CIRCLE, SPHERE2, TORUS2, CutLocusError, DomainError,
                                   ManifoldPoint, TangentVector, cut_pair_distance, distance,
                                   exp_map, get_manifold, log_map)

from conftest import MANIFOLDS


def test_diameters():
    assert CIRCLE.diameter == math.pi
    assert SPHERE2.diameter == math.pi
    assert TORUS2.diameter == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_canonical_domains(rng):
    s = SPHERE2.canonical(rng.normal(size=(50, 3)) * 7)
    assert np.allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-12)
    c = CIRCLE.canonical(rng.uniform(-20, 20, size=(50, 1)))
    assert np.all((c >= 0) & (c < 2 * np.pi))
    t = TORUS2.canonical(rng.uniform(-5, 5, size=(50, 2)))
    assert np.all((t >= 0) & (t < 1))
    # wrapping that lands exactly on the period must fold back to 0
    assert CIRCLE.canonical([-1e-17])[0] < 2 * np.pi
    assert TORUS2.canonical([[-1e-17, 1.0]])[0, 1] == 0.0


def test_sphere_distance_examples():
    x, y = ManifoldPoint("sphere2", [1, 0, 0]), ManifoldPoint("sphere2", [0, 1, 0])
    assert distance(x, x) == 0.0
    assert distance(x, y) == pytest.approx(math.pi / 2, abs=1e-15)


def test_torus_distance_matches_lattice_images():
    x, y = np.array([0.1, 0.1]), np.array([0.9, 0.1])
    images = [np.linalg.norm(y + [i, j] - x) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    expected = min(images)  # brute-force oracle: 0.2
    assert expected == pytest.approx(0.2, abs=1e-15)
    assert TORUS2.distance(x, y) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("name", MANIFOLDS)
def test_distance_against_independent_formula(name, rng):
    m = get_manifold(name)
    x, y = m.random_point(rng, 300), m.random_point(rng, 300)
    d = m.distance(x, y)
    if name == "sphere2":
        ref = np.arccos(np.clip(np.sum(x * y, axis=1), -1, 1))
        assert np.allclose(d, ref, atol=1e-7)
    elif name == "circle":
        a = np.abs(x - y)[:, 0]
        assert np.allclose(d, np.minimum(a, 2 * np.pi - a), atol=1e-12)
    else:
        imgs = np.stack([np.linalg.norm(y + [i, j] - x, axis=1) for i in (-1, 0, 1) for j in (-1, 0, 1)])
        assert np.allclose(d, imgs.min(axis=0), atol=1e-12)


def test_exp_examples():
    x = ManifoldPoint("sphere2", [1, 0, 0])
    assert exp_map(x, TangentVector(x, [0, 0, 0])) == x
    y = exp_map(x, TangentVector(x, [0, math.pi / 2, 0]))
    # closed-form geodesic cos|v| x + sin|v| v/|v|
    assert np.allclose(y.coords, [math.cos(math.pi / 2), 1.0, 0.0], atol=1e-15)
    c = ManifoldPoint("circle", [0.0])
    assert exp_map(c, TangentVector(c, [math.pi / 3])).coords[0] == pytest.approx(math.pi / 3, abs=1e-15)


def test_log_examples():
    x, y = ManifoldPoint("sphere2", [1, 0, 0]), ManifoldPoint("sphere2", [0, 1, 0])
    assert np.array_equal(log_map(x, x).components, np.zeros(3))
    assert np.allclose(log_map(x, y).components, [0, math.pi / 2, 0], atol=1e-15)
    with pytest.raises(CutLocusError):
        log_map(x, ManifoldPoint("sphere2", [-1, 0, 0]))


def test_cut_pair_distance_examples():
    x = ManifoldPoint("sphere2", [1, 0, 0])
    assert cut_pair_distance(x, ManifoldPoint("sphere2", [-1, 0, 0])) == pytest.approx(0.0, abs=1e-15)
    assert cut_pair_distance(x, ManifoldPoint("sphere2", [0, 1, 0])) == pytest.approx(math.pi / 2, abs=1e-15)
    assert cut_pair_distance(ManifoldPoint("torus2", [0, 0]), ManifoldPoint("torus2", [0.5, 0.25])) == 0.0


def _cut_set(name, x, n=400):
    """Discretized cut locus of ``x`` (400 points)."""
    if name == "circle":
        return np.array([[x[0] + np.pi]])
    if name == "sphere2":
        return -x[None, :]
    s = np.linspace(0, 1, n // 2, endpoint=False)
    a = np.stack([np.full_like(s, x[0] + 0.5), s], axis=1)
    b = np.stack([s, np.full_like(s, x[1] + 0.5)], axis=1)
    return TORUS2.canonical(np.concatenate([a, b]))


@pytest.mark.parametrize("name", MANIFOLDS)
def test_cut_pair_distance_matches_brute_force(name, rng):
    m = get_manifold(name)
    resolution = 2.0 / 400
    for x, y in zip(m.random_point(rng, 40), m.random_point(rng, 40)):
        cut = _cut_set(name, x)
        brute = float(np.min(m.distance(np.broadcast_to(y, cut.shape), cut)))
        assert abs(brute - m.cut_pair_distance(x, y)) <= 2 * resolution + 1e-12


@pytest.mark.parametrize("name", MANIFOLDS)
def test_metric_axioms(name, rng):
    m = get_manifold(name)
    x, y, z = (m.random_point(rng, 1000) for _ in range(3))
    assert np.array_equal(m.distance(x, y), m.distance(y, x))
    assert np.all(m.distance(x, z) <= m.distance(x, y) + m.distance(y, z) + 1e-9)
    assert np.all(m.distance(x, x) <= 1e-12)


@pytest.mark.parametrize("name", MANIFOLDS)
def test_exp_log_roundtrip(name, rng):
    m = get_manifold(name)
    x, y = m.random_point(rng, 3000), m.random_point(rng, 3000)
    keep = m.cut_pair_distance(x, y) > 1e-3
    x, y = x[keep][:1000], y[keep][:1000]
    assert len(x) == 1000
    back = m.exp(x, m.log(x, y))
    assert np.max(m.distance(back, y)) < 1e-8


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10),
       st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_sphere_roundtrip_property(a, b, c, d, e, f):
    x, y = np.array([a, b, c]), np.array([d, e, f])
    if np.linalg.norm(x) < 1e-3 or np.linalg.norm(y) < 1e-3:
        return
    x, y = SPHERE2.canonical(x), SPHERE2.canonical(y)
    if SPHERE2.cut_pair_distance(x, y) <= 1e-3:
        with pytest.raises(CutLocusError) if SPHERE2.cut_pair_distance(x, y) <= 1e-6 else _nullcontext():
            SPHERE2.log(x, y)
        return
    v = SPHERE2.log(x, y)
    assert abs(np.dot(v, x)) < 1e-10
    assert np.linalg.norm(v) == pytest.approx(SPHERE2.distance(x, y), abs=1e-10)
    assert SPHERE2.distance(SPHERE2.exp(x, v), y) < 1e-8


class _nullcontext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_sphere_log_is_half_gradient_of_squared_distance(rng):
    h = 1e-4
    for x, y in zip(SPHERE2.random_point(rng, 50), SPHERE2.random_point(rng, 50)):
        if SPHERE2.cut_pair_distance(x, y) < 0.1:
            continue
        grad = -SPHERE2.log(x, y)
        for e in SPHERE2.tangent_basis(x):
            plus = SPHERE2.distance(SPHERE2.exp(x, h * e), y) ** 2
            minus = SPHERE2.distance(SPHERE2.exp(x, -h * e), y) ** 2
            assert (plus - minus) / (2 * h) / 2 == pytest.approx(np.dot(grad, e), abs=1e-5)


@pytest.mark.parametrize("name", MANIFOLDS)
def test_tangent_basis_orthonormal(name, rng):
    m = get_manifold(name)
    x = m.random_point(rng)
    B = m.tangent_basis(x)
    assert B.shape == (m.dim, m.coord_dim)
    assert np.allclose(B @ B.T, np.eye(m.dim), atol=1e-12)
    if name == "sphere2":
        assert np.allclose(B @ x, 0, atol=1e-12)


def test_typed_api_rejects_mixed_manifolds():
    with pytest.raises(DomainError):
        distance(ManifoldPoint("circle", [0.0]), ManifoldPoint("torus2", [0.0, 0.0]))


def test_sphere_tangent_vectors_are_tangent():
    x = ManifoldPoint("sphere2", [0, 0, 1])
    v = TangentVector(x, [0.3, -0.2, 0.0])
    assert abs(np.dot(v.components, x.coords)) <= 1e-10
    with pytest.raises(DomainError):
        TangentVector(x, [0.0, 0.0, 1.0])


def test_points_are_hashable_and_frozen():
    p = ManifoldPoint("circle", [2 * np.pi + 0.5])
    assert p == ManifoldPoint("circle", [0.5 + 1e-17 * 0])
    assert len({p, ManifoldPoint("circle", [0.5])}) == 1 or p.coords[0] != 0.5
    with pytest.raises(ValueError):
        p.coords[0] = 1.0


def test_unknown_manifold():
    with pytest.raises(DomainError):
        get_manifold("hyperbolic")

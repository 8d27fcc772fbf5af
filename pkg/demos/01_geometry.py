"""Closed-form geometry on the circle, the round sphere and the flat torus."""
import numpy as np

from manifold_jko import CutLocusError, get_manifold

sphere = get_manifold("sphere2")
x = np.array([1.0, 0.0, 0.0])
y = np.array([0.0, 0.6, 0.8])

v = sphere.log(x, y)
print("d(x, y)            ", sphere.distance(x, y))
print("|log_x y|          ", np.linalg.norm(v))
print("exp_x(log_x y) - y ", sphere.exp(x, v) - y)

# halfway along the geodesic
print("midpoint           ", sphere.geodesic(x, y, 0.5))

# distance of the pair to the cut locus shrinks to zero at the antipode
for s in (0.0, 0.5, 0.9, 0.999):
    z = sphere.geodesic(x, -x + np.array([0, 1e-3, 0]), s) if s else x
    print(f"cut margin at s={s:<5}", sphere.cut_pair_distance(x, sphere.canonical(z)))

try:
    sphere.log(x, -x)
except CutLocusError as err:
    print("antipodal log:", err)

torus = get_manifold("torus2")
a, b = np.array([0.1, 0.1]), np.array([0.9, 0.1])
print("\ntorus distance wraps around:", torus.distance(a, b))
print("torus log points the short way:", torus.log(a, b))
print("cut margin of (0,0),(0.5,0.25):", torus.cut_pair_distance(np.zeros(2), np.array([0.5, 0.25])))

circle = get_manifold("circle")
print("\ncircle exp(0, pi/3) =", circle.exp(np.array([0.0]), np.array([np.pi / 3])))
print("diameters:", [get_manifold(n).diameter for n in ("circle", "sphere2", "torus2")])

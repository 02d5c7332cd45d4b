"""U(1)-invariant special Lagrangian fibrations of open subsets of C^3.

Fibers N_alpha, alpha = (a, b, c), are lifts of solutions of the potential
equation with boundary data Phi(alpha) = phi + b x + c y. Also provides the explicit
piecewise-smooth fibration F(z) = (a, b) of C^3 and flux coordinates (periods of
omega' over cylinders swept by 1-cycles along a path of fibers).
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .calib import to_complex, to_real
from .errors import DomainError, PathSingularityError
from .families import SampleCloud, fd_frame, frames_from
from .u1pde import DomainMesh, count_zeros, lift_point, lift_to_sl3, potential_to_uv, solve_dirichlet


@dataclass(frozen=True)
class FiberKey:
    a: float
    b: float
    c: float

    def __iter__(self):
        return iter((self.a, self.b, self.c))


@dataclass
class BoundaryFamily:
    """Boundary data family alpha -> Phi(alpha) on a mesh.

    Attributes
    ----------
    phi : callable(x, y)
        Base boundary function.
    mesh : DomainMesh
    box : tuple of 3 (lo, hi) pairs
        The open key box U.
    rule : callable(phi, key) -> callable(x, y), optional
        Default Phi(a, b, c) = phi + b x + c y.
    """

    phi: object
    mesh: DomainMesh
    box: tuple = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    rule: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    def contains(self, key):
        return all(lo < v < hi for v, (lo, hi) in zip(key, self.box))

    def boundary_function(self, key):
        if self.rule is not None:
            return self.rule(self.phi, key)
        phi, b, c = self.phi, key.b, key.c
        return lambda x, y: phi(x, y) + b * x + c * y

    def solve(self, key):
        key = FiberKey(*map(float, key))
        if key not in self._cache:
            if not self.contains(key):
                raise DomainError(f"key {tuple(key)} outside the family box")
            self._cache[key] = solve_dirichlet(self.mesh, self.boundary_function(key), key.a)
        return self._cache[key]


def boundary_extrema(values):
    """Numbers of strict local maxima and minima of a cyclic sequence."""
    v = np.asarray(values)
    prev, nxt = np.roll(v, 1), np.roll(v, -1)
    nmax = int(np.sum((v > prev) & (v >= nxt)))
    nmin = int(np.sum((v < prev) & (v <= nxt)))
    return nmax, nmin


def check_extrema_condition(family, key1, key2):
    """Phi(alpha) - Phi(alpha') has exactly one local max and one local min on the boundary polyline."""
    P = family.mesh.boundary
    d = family.boundary_function(FiberKey(*key1))(P[:, 0], P[:, 1]) - family.boundary_function(FiberKey(*key2))(P[:, 0], P[:, 1])
    return boundary_extrema(d) == (1, 1)


def build_fiber(family, key, n_theta=8, frames=True):
    """Solve for f_alpha and lift it to a sampled fiber in C^3."""
    F = family.solve(key)
    uv = potential_to_uv(F)
    cloud = lift_to_sl3(uv, n_theta=n_theta, frames=frames)
    cloud.meta.update(key=tuple(float(v) for v in key), potential=F, uv=uv)
    return cloud


def fiber_distance(c1, c2):
    """Minimum distance over sampled point pairs of two clouds."""
    d, _ = kernels.nearest_distances(c1.points, c2.points)
    return float(d.min())


def fiber_zero_count(family, key1, key2):
    """Interior zeros of the difference of the (u, v) fields of two fibers with equal a."""
    if key1[0] != key2[0]:
        raise DomainError("zero counting compares fibers with the same a")
    return count_zeros(potential_to_uv(family.solve(key1)), potential_to_uv(family.solve(key2)))


# --- explicit fibration --------------------------------------------------------

def explicit_fibration(z):
    """Piecewise-smooth SL fibration F: C^3 -> R x C.

    2a = |z1|^2 - |z2|^2 and
    b = z3                          if a = z1 = z2 = 0,
    b = z3 + conj(z1 z2) / |z1|     if a >= 0 and z1 != 0,
    b = z3 + conj(z1 z2) / |z2|     if a < 0.

    Parameters
    ----------
    z : array (..., 6)
        Interleaved real coordinates.

    Returns
    -------
    a : ndarray
    b : complex ndarray
    """
    Z = to_complex(z)
    z1, z2, z3 = Z[..., 0], Z[..., 1], Z[..., 2]
    r1, r2 = np.abs(z1), np.abs(z2)
    a = 0.5 * (r1 * r1 - r2 * r2)
    num = np.conj(z1) * np.conj(z2)
    den = np.where(a >= 0, r1, r2)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(den > 0, z3 + num / np.where(den > 0, den, 1.0), z3)
    if np.ndim(a) == 0:
        return float(a), complex(b)
    return a, b


def _explicit_map(a, b):
    def f(p):
        th, ps, s = p[..., 0], p[..., 1], p[..., 2]
        if a >= 0:
            r1, r2 = np.sqrt(2 * a + s * s), s
        else:
            r1, r2 = s, np.sqrt(s * s - 2 * a)
        z1 = r1 * np.exp(1j * th)
        z2 = r2 * np.exp(1j * ps)
        z3 = b - s * np.exp(-1j * (th + ps))
        return to_real(np.stack([z1, z2, z3], axis=-1))
    return f


def explicit_fiber_points(a, b, n, rng=None, s_range=(0.1, 2.0), frames=True, include_vertex=True):
    """Sample the fiber F^{-1}(a, b).

    The fiber is parametrized by (theta, psi, s):
    a >= 0: z1 = (2a + s^2)^(1/2) e^{i theta}, z2 = s e^{i psi};
    a < 0:  z1 = s e^{i theta}, z2 = (s^2 - 2a)^(1/2) e^{i psi};
    in both cases z3 = b - s e^{-i(theta + psi)}.
    For a = 0 and ``include_vertex`` the cone vertex (0, 0, b) is appended (without a frame).
    """
    rng = np.random.default_rng(rng)
    P = np.column_stack([rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n), rng.uniform(*s_range, n)])
    fmap = _explicit_map(a, complex(b))
    if frames:
        base, vecs = fd_frame(fmap, P)
        frs = frames_from(base, vecs)
    else:
        base, frs = fmap(P), None
    if a == 0 and include_vertex:
        vertex = to_real(np.array([0, 0, complex(b)]))
        base = np.vstack([base, vertex])
        idx = np.arange(n) if frames else None
        return SampleCloud(base, frs, None, dict(a=a, b=complex(b)), idx)
    return SampleCloud(base, frs, None, dict(a=a, b=complex(b)))


@dataclass(frozen=True)
class FiberCheck:
    variation: float
    max_sl_residual: float
    min_calib_ratio: float
    contains_vertex: bool


def explicit_fiber_check(a, b, n_samples=1000, rng=0):
    """Sample a fiber of the explicit fibration and check F is constant and the fiber is SL."""
    cloud = explicit_fiber_points(a, b, n_samples, rng)
    A, B = explicit_fibration(cloud.points)
    var = float(max(np.abs(A - a).max(), np.abs(B - complex(b)).max()))
    r = cloud.residuals()
    vertex = bool(np.any(np.all(np.abs(cloud.points - to_real(np.array([0, 0, complex(b)]))) == 0, axis=1)))
    return FiberCheck(var, float(max(r[:, 0].max(), r[:, 1].max())), float(r[:, 2].min()), vertex)


# --- flux coordinates ----------------------------------------------------------

def loop_action(points):
    """Action of a closed polygon: (1/2) sum over edges of (x dy - y dx) in each complex coordinate."""
    Z = to_complex(points)
    Zn = np.roll(Z, -1, axis=0)
    return float(0.5 * np.sum(np.imag(np.conj(Z) * Zn)))


def _cycles(field_uv, n=256, center=(0.0, 0.0), radius=0.5):
    """Basis 1-cycles of a fiber: the U(1) orbit over a fixed vertex and an (x, y)-loop at theta = 0."""
    mesh = field_uv.mesh
    a = field_uv.a
    k = int(np.argmin(np.hypot(mesh.x - center[0], mesh.y - center[1])))
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    orbit = lift_point(mesh.x[k], mesh.y[k], t, field_uv.u[k], field_uv.v[k], a)
    pts = np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
    iu = mesh.interpolator(field_uv.u)
    iv = mesh.interpolator(field_uv.v)
    loop = lift_point(pts[:, 0], pts[:, 1], 0.0, iu(pts), iv(pts), a)
    return [orbit, loop]


def _cylinder_flux(g0, g1, nt=8):
    """Integral of omega'(d_s G, d_t G) over the straight-line cylinder between two loops."""
    total = 0.0
    ds = 2 * np.pi / len(g0)
    for tau in (np.arange(nt) + 0.5) / nt:
        G = (1 - tau) * g0 + tau * g1
        Gs = (np.roll(G, -1, axis=0) - np.roll(G, 1, axis=0)) / (2 * ds)
        Gt = g1 - g0
        w = np.sum(np.imag(np.conj(to_complex(Gs)) * to_complex(Gt)), axis=-1)
        total += w.sum() * ds / nt
    return total


def flux_coordinates(family, path, max_depth=8, step_factor=0.1):
    """Periods of omega' over the cylinders swept by the fiber 1-cycles along a key path.

    Basis cycles: the U(1) orbit and an (x, y)-loop in the fiber. Adjacent keys are
    subdivided until the potentials differ by less than ``step_factor * h`` in
    sup-norm. Every fiber on the path must be nonsingular (a != 0).

    Returns
    -------
    ndarray, shape (2,)
        Accumulated periods (orbit cycle, (x, y)-loop).
    """
    keys = [FiberKey(*map(float, k)) for k in path]
    if not keys:
        raise DomainError("empty path")
    for k0, k1 in zip(keys, keys[1:]):
        if k0.a == 0 or k1.a == 0 or k0.a * k1.a < 0:
            raise PathSingularityError("path passes through a singular fiber (a = 0)")
    if keys[0].a == 0:
        raise PathSingularityError("path starts on a singular fiber (a = 0)")
    h = family.mesh.h
    total = np.zeros(2)

    def segment(k0, k1, depth):
        if k0 == k1:
            return np.zeros(2)
        F0, F1 = family.solve(k0), family.solve(k1)
        if np.abs(F0.f - F1.f).max() >= step_factor * h and depth < max_depth:
            mid = FiberKey(*((np.array(tuple(k0)) + np.array(tuple(k1))) / 2))
            return segment(k0, mid, depth + 1) + segment(mid, k1, depth + 1)
        c0 = _cycles(potential_to_uv(F0))
        c1 = _cycles(potential_to_uv(F1))
        return np.array([_cylinder_flux(g0, g1) for g0, g1 in zip(c0, c1)])

    for k0, k1 in zip(keys, keys[1:]):
        total += segment(k0, k1, 0)
    return total


def flux_oracle(family, path):
    """Stokes form of the flux: action of the start cycles minus action of the end cycles."""
    k0, k1 = FiberKey(*map(float, path[0])), FiberKey(*map(float, path[-1]))
    c0 = _cycles(potential_to_uv(family.solve(k0)))
    c1 = _cycles(potential_to_uv(family.solve(k1)))
    return np.array([loop_action(g0) - loop_action(g1) for g0, g1 in zip(c0, c1)])

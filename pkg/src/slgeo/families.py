"""Explicit special Lagrangian families in C^3 and samplers for them.

Families: the T^2-invariant cone and its smoothings L_t, the SO(3)-invariant
family, evolving quadrics with coprime weights, and the leading-order model of
a branched double cover of a plane.
"""
import csv
import enum
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.optimize import least_squares

from . import kernels
from .calib import TangentFrame, sl_residuals, to_complex, to_real
from .errors import DegeneracyError, DomainError, EmptySampleError, OffQuadricError

FD_STEP = 1e-5


class Family(enum.Enum):
    HL_CONE = "hl_cone"
    HL_DESING = "hl_desing"
    SO3 = "so3"
    QUADRIC = "quadric"
    BRANCHED = "branched"


@dataclass(frozen=True)
class FamilySpec:
    """Family kind plus its parameters.

    params: () for HL_CONE, (t,) for HL_DESING and SO3, (a1, a2, c) for QUADRIC,
    (u, v) complex 3-vectors for BRANCHED.
    """

    kind: Family
    params: tuple = ()

    def __post_init__(self):
        kind = Family(self.kind)
        object.__setattr__(self, "kind", kind)
        p = tuple(self.params)
        if kind in (Family.HL_DESING, Family.SO3):
            if len(p) != 1 or not p[0] > 0:
                raise DomainError(f"{kind.value} needs a single parameter t > 0")
        elif kind is Family.QUADRIC:
            if len(p) != 3:
                raise DomainError("quadric needs (a1, a2, c)")
            _check_weights(p[0], p[1])
        elif kind is Family.BRANCHED:
            if len(p) != 2:
                raise DomainError("branched model needs (u, v)")
            u, v = (np.asarray(x, dtype=complex) for x in p)
            _check_branched(u, v)
            p = (u, v)
        object.__setattr__(self, "params", p)

    @property
    def is_cone(self):
        return self.kind is Family.HL_CONE or (self.kind is Family.QUADRIC and self.params[2] == 0)


@dataclass
class SampleCloud:
    """Points of C^m (rows, interleaved real coordinates), optional frames, and provenance.

    ``frames[k]`` is based at ``points[frame_index[k]]``; without an index there is
    one frame per point.
    """

    points: np.ndarray
    frames: list = None
    family: FamilySpec = None
    meta: dict = field(default_factory=dict)
    frame_index: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.frames is not None:
            if self.frame_index is None:
                if len(self.frames) != len(self.points):
                    raise ValueError("one frame per point expected when frame_index is omitted")
                self.frame_index = np.arange(len(self.frames))
            self.frame_index = np.asarray(self.frame_index, dtype=int)
            if len(self.frame_index) != len(self.frames):
                raise ValueError("frame_index and frames differ in length")

    def __len__(self):
        return len(self.points)

    def residuals(self):
        """Per-frame (omega_norm, |im_omega_val|, calib_ratio) as an (n, 3) array."""
        if not self.frames:
            raise EmptySampleError("cloud has no frames")
        V = np.stack([fr.vectors for fr in self.frames])
        o = np.array([fr.orientation for fr in self.frames])
        out = sl_residuals(V, o)
        out[:, 1] = np.abs(out[:, 1])
        return out

    def to_csv(self, path):
        m = self.points.shape[1] // 2
        header = [f"{p}{j + 1}" for j in range(m) for p in ("re", "im")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in self.points:
                w.writerow([format(x, ".17g") for x in row])

    @classmethod
    def from_csv(cls, path):
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(pts)


def _check_weights(a1, a2):
    if int(a1) != a1 or int(a2) != a2 or a1 <= 0 or a2 <= 0:
        raise DomainError("quadric weights must be positive integers")
    if gcd(int(a1), int(a2)) != 1:
        raise DomainError(f"quadric weights {a1}, {a2} are not coprime")


def _check_branched(u, v):
    if u.shape != (3,) or v.shape != (3,):
        raise DomainError("u, v must be complex 3-vectors")
    if abs(np.sum(np.conj(u) * v).imag) > 1e-12 * (1 + np.abs(u).max() * np.abs(v).max()):
        raise DegeneracyError("u and v must satisfy omega'(u, v) = 0")
    M = np.stack([to_real(u), to_real(v)])
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise DegeneracyError("u and v are linearly dependent over R")


# --- closed forms ---------------------------------------------------------

def hl_point(t, theta, z):
    """Point ((|z|^2 + t^2)^(1/2) e^{i theta}, z, e^{-i theta} conj z) of L_t (vectorized)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=complex)
    e = np.exp(1j * theta)
    z1 = np.sqrt(np.abs(z) ** 2 + t * t) * e
    return to_real(np.stack(np.broadcast_arrays(z1, z, np.conj(z) / e), axis=-1))


def hl_cone_point(r, theta1, theta2):
    """Point r (e^{i theta1}, e^{i theta2}, e^{-i(theta1 + theta2)}) of the T^2-cone L_0."""
    r, theta1, theta2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, theta1, theta2)))
    z = r[..., None] * np.exp(1j * np.stack([theta1, theta2, -theta1 - theta2], axis=-1))
    return to_real(z)


def so3_point(t, theta, dir):
    """Point e^{i theta} r dir with r = t (sin 3 theta)^(-1/3), theta in (0, pi/3)."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta >= np.pi / 3):
        raise DomainError("theta must lie strictly inside (0, pi/3)")
    if not t > 0:
        raise DomainError("t must be positive")
    d = np.asarray(dir, dtype=float)
    if np.any(np.abs(np.linalg.norm(d, axis=-1) - 1) > 1e-9):
        raise DomainError("dir must be a unit vector")
    r = t * np.sin(3 * theta) ** (-1.0 / 3.0)
    return to_real((r * np.exp(1j * theta))[..., None] * d)


def quadric_point(a1, a2, c, theta, x, tol=1e-9):
    """Point (e^{i a1 theta} x1, e^{i a2 theta} x2, i e^{i a3 theta} x3), a3 = -a1 - a2."""
    _check_weights(a1, a2)
    a3 = -a1 - a2
    x = np.asarray(x, dtype=float)
    q = a1 * x[..., 0] ** 2 + a2 * x[..., 1] ** 2 + a3 * x[..., 2] ** 2
    if np.any(np.abs(q - c) > tol * (1 + np.abs(c) + np.sum(x * x, axis=-1))):
        raise OffQuadricError("x does not lie on a1 x1^2 + a2 x2^2 + a3 x3^2 = c")
    theta = np.asarray(theta, dtype=float)[..., None]
    ph = np.exp(1j * theta * np.array([a1, a2, a3])) * np.array([1, 1, 1j])
    return to_real(ph * x)


def quadric_x3(a1, a2, c, x1, x2, branch=1):
    """Solve the quadric constraint for x3 on the given branch (NaN where no real root)."""
    s = (a1 * np.asarray(x1) ** 2 + a2 * np.asarray(x2) ** 2 - c) / (a1 + a2)
    with np.errstate(invalid="ignore"):
        return branch * np.sqrt(s)


def cross3(r, s):
    """Conjugate-bilinear cross product on C^3 (complex 3-vectors in, complex 3-vector out)."""
    r = np.conj(np.asarray(r, dtype=complex))
    s = np.conj(np.asarray(s, dtype=complex))
    return 0.5 * np.stack([
        r[..., 1] * s[..., 2] - r[..., 2] * s[..., 1],
        r[..., 2] * s[..., 0] - r[..., 0] * s[..., 2],
        r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0],
    ], axis=-1)


def branched_model_point(u, v, x, y, t):
    """Leading-order term of a branched double cover of the plane spanned by u, v.

    (x + g'(u,v) t^2 / 4) u + (y^2 - |u|^2 t^2 / 4) v + 2 y t (u x v).

    This truncation is an approximation to the branched family: the omitted terms
    are O(|x|^2 + |y|^3 + |t|^3). The truncated map itself takes values in the SL
    3-plane spanned over R by u, v and u x v, which it double covers with branching
    along the real line through u (y = t = 0). So its SL residuals vanish wherever it
    is immersed, and the higher-order terms are what make the singular point isolated.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    _check_branched(u, v)
    x, y, t = (np.asarray(a, dtype=float)[..., None] for a in (x, y, t))
    g = np.sum(np.conj(u) * v).real
    nu = np.sum(np.abs(u) ** 2)
    z = (x + 0.25 * g * t * t) * u + (y * y - 0.25 * nu * t * t) * v + 2 * y * t * cross3(u, v)
    return to_real(z)


# --- frames ---------------------------------------------------------------

def fd_frame(param_map, p, step=FD_STEP):
    """Calibrated tangent frame of a parametrization by central differences.

    ``param_map`` maps an array (..., k) of parameters to points (..., 2m);
    ``p`` is a batch (n, k). Returns base points (n, 2m) and vectors (n, k, 2m).
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    n, k = p.shape
    base = param_map(p)
    E = np.eye(k) * step
    fwd = param_map(p[:, None, :] + E)
    bwd = param_map(p[:, None, :] - E)
    return base, (fwd - bwd) / (2 * step)


def frames_from(base, vecs):
    """List of calibrated TangentFrame objects from batched arrays."""
    s = np.linalg.det(np.swapaxes(to_complex(vecs), -1, -2)).real
    return [TangentFrame(b, V, 1 if si >= 0 else -1) for b, V, si in zip(base, vecs, s)]


def _hl_desing_map(t):
    return lambda p: hl_point(t, p[..., 0], p[..., 1] + 1j * p[..., 2])


def _hl_cone_map(p):
    return hl_cone_point(p[..., 0], p[..., 1], p[..., 2])


def _so3_map(t):
    def f(p):
        d = np.stack([np.sin(p[..., 1]) * np.cos(p[..., 2]), np.sin(p[..., 1]) * np.sin(p[..., 2]), np.cos(p[..., 1])], axis=-1)
        return so3_point(t, p[..., 0], d)
    return f


def _quadric_map(a1, a2, c, branch):
    def f(p):
        x1, x2 = p[..., 1], p[..., 2]
        x3 = quadric_x3(a1, a2, c, x1, x2, branch)
        return quadric_point(a1, a2, c, p[..., 0], np.stack([x1, x2, x3], axis=-1))
    return f


def _branched_map(u, v):
    return lambda p: branched_model_point(u, v, p[..., 0], p[..., 1], p[..., 2])


def family_params(spec, n, rng=None, method="random"):
    """Parameter samples and the parametrization map(s) for a family.

    Returns a list of (map, params) pairs; QUADRIC contributes one pair per x3 branch.
    """
    rng = np.random.default_rng(rng)
    kind = spec.kind
    if kind is Family.HL_DESING:
        t = spec.params[0]
        if method == "grid":
            p = _disk_grid(n, 2.0 * max(t, 1.0))
        else:
            th = rng.uniform(0, 2 * np.pi, n)
            rad = 2 * max(t, 1.0) * np.sqrt(rng.uniform(0, 1, n))
            ph = rng.uniform(0, 2 * np.pi, n)
            p = np.stack([th, rad * np.cos(ph), rad * np.sin(ph)], axis=1)
        return [(_hl_desing_map(t), p)]
    if kind is Family.HL_CONE:
        p = np.stack([rng.uniform(0.2, 2.0, n), rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n)], axis=1)
        return [(_hl_cone_map, p)]
    if kind is Family.SO3:
        t = spec.params[0]
        p = np.stack([rng.uniform(0.05, np.pi / 3 - 0.05, n), np.arccos(rng.uniform(-0.95, 0.95, n)), rng.uniform(0, 2 * np.pi, n)], axis=1)
        return [(_so3_map(t), p)]
    if kind is Family.QUADRIC:
        a1, a2, c = spec.params
        out = []
        for branch in (1, -1):
            need = n // 2 if branch == 1 else n - n // 2
            got = []
            while sum(len(g) for g in got) < need:
                x = rng.uniform(-2, 2, size=(4 * need + 8, 2))
                s = (a1 * x[:, 0] ** 2 + a2 * x[:, 1] ** 2 - c) / (a1 + a2)
                got.append(x[s > 0.05])
            x = np.concatenate(got)[:need]
            th = rng.uniform(0, 2 * np.pi, need)
            out.append((_quadric_map(a1, a2, c, branch), np.column_stack([th, x])))
        return out
    if kind is Family.BRANCHED:
        u, v = spec.params
        p = rng.uniform(-0.5, 0.5, size=(n, 3))
        return [(_branched_map(u, v), p)]
    raise DomainError(f"unknown family {kind}")


def _disk_grid(n, radius):
    """Deterministic (theta, Re z, Im z) grid with z in a disk, always containing z = 0."""
    k = max(2, int(round((n / 8) ** (1 / 3) * 2)))
    nt = max(4, n // (k * k) or 4)
    ths = np.linspace(0, 2 * np.pi, nt, endpoint=False)
    xs = np.linspace(-radius, radius, 2 * k + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    keep = X ** 2 + Y ** 2 <= radius ** 2
    X, Y = X[keep], Y[keep]
    T = np.repeat(ths, len(X))
    return np.column_stack([T, np.tile(X, nt), np.tile(Y, nt)])


def sample_family(spec, n, rng=None, frames=True, method="random"):
    """Sample n points of a family with central-difference tangent frames.

    Parameters
    ----------
    spec : FamilySpec
    n : int
    rng : seed or Generator
    frames : bool
        Build calibrated TangentFrames (step 1e-5).
    method : {"random", "grid"}
        "grid" is deterministic and only used for HL_DESING.
    """
    pts, frs = [], []
    for fmap, p in family_params(spec, n, rng, method):
        if frames:
            b, V = fd_frame(fmap, p)
            pts.append(b)
            frs.extend(frames_from(b, V))
        else:
            pts.append(fmap(p))
    return SampleCloud(np.concatenate(pts), frs if frames else None, spec)


def hl_cloud(t, n_theta=24, n_radial=12, radius=1.0):
    """Deterministic polar grid sample of L_t covering the ball of given radius (includes z = 0)."""
    ths = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    rs = np.linspace(0, radius, n_radial + 1)
    phs = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    T, R, P = np.meshgrid(ths, rs[1:], phs, indexing="ij")
    z = np.concatenate([(R * np.exp(1j * P)).ravel(), np.zeros(n_theta)])
    th = np.concatenate([T.ravel(), ths])
    return SampleCloud(hl_point(t, th, z), None, FamilySpec(Family.HL_DESING, (t,)) if t > 0 else FamilySpec(Family.HL_CONE))


# --- convergence to the cone ----------------------------------------------

def _cone_sampler(cone, radius, n_max=10_000):
    """Cone samples inside the ball of radius 2*radius plus the parametrization for refinement."""
    R = 2.0 * radius
    if cone.kind is Family.HL_CONE:
        k = int(np.floor(n_max ** (1 / 3)))
        rs = np.linspace(0, R / np.sqrt(3), k)
        ths = np.linspace(0, 2 * np.pi, k, endpoint=False)
        P = np.stack(np.meshgrid(rs, ths, ths, indexing="ij"), axis=-1).reshape(-1, 3)
        return [(_hl_cone_map, P, _hl_cone_guess)]
    if cone.kind is Family.QUADRIC and cone.params[2] == 0:
        a1, a2, _ = cone.params
        k = int(np.floor((n_max / 2) ** (1 / 3)))
        ths = np.linspace(0, 2 * np.pi, k, endpoint=False)
        xs = np.linspace(-R, R, k)
        P = np.stack(np.meshgrid(ths, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
        return [(_quadric_map(a1, a2, 0.0, b), P, None) for b in (1, -1)]
    raise DomainError("asymptotic_cone_distance needs a cone family (HL_CONE or QUADRIC with c = 0)")


def _hl_cone_guess(p):
    z = to_complex(p)
    return np.array([np.linalg.norm(p) / np.sqrt(3), np.angle(z[0]), np.angle(z[1])])


def asymptotic_cone_distance(cloud, cone, radius, refine=True):
    """One-sided Hausdorff distance from the cloud points inside a ball to a cone.

    Brute-force nearest neighbour over at most 10^4 cone samples, then each
    distance is refined by a local least-squares solve on the cone parametrization.
    """
    pts = np.asarray(cloud.points if isinstance(cloud, SampleCloud) else cloud, dtype=float)
    inside = pts[np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)]
    if len(inside) == 0:
        raise EmptySampleError(f"no cloud points inside radius {radius}")
    best = np.full(len(inside), np.inf)
    for fmap, P, guess in _cone_sampler(cone, radius):
        X = fmap(P)
        ok = np.all(np.isfinite(X), axis=1)
        X, P = X[ok], P[ok]
        d, idx = kernels.nearest_distances(inside, X)
        if refine:
            for i in range(len(inside)):
                if d[i] == 0:
                    continue
                starts = [P[idx[i]]] if guess is None else [P[idx[i]], guess(inside[i])]
                for q0 in starts:
                    sol = least_squares(lambda q: fmap(q[None])[0] - inside[i], q0, method="lm", xtol=1e-14, ftol=1e-14)
                    if np.all(np.isfinite(sol.fun)):
                        d[i] = min(d[i], np.linalg.norm(sol.fun))
        best = np.minimum(best, d)
    return float(best.max())


# --- symmetry and moment map ------------------------------------------------

def t2_action(points, theta1, theta2):
    """Apply diag(e^{i theta1}, e^{i theta2}, e^{-i(theta1 + theta2)}) to points of C^3."""
    z = to_complex(points)
    return to_real(z * np.exp(1j * np.array([theta1, theta2, -theta1 - theta2])))


def hl_membership(points, t):
    """Residual of the equations cutting out L_t: |z1|^2 - t^2 = |z2|^2 = |z3|^2 and z1 z2 z3 real >= 0."""
    z = to_complex(points)
    a = np.abs(z) ** 2
    prod = z[..., 0] * z[..., 1] * z[..., 2]
    return np.max(np.stack([np.abs(a[..., 0] - t * t - a[..., 1]), np.abs(a[..., 1] - a[..., 2]),
                            np.abs(prod.imag), np.maximum(-prod.real, 0)], axis=-1), axis=-1)


def moment_map(points):
    """|z1|^2 - |z2|^2 for points of C^3."""
    z = to_complex(points)
    return np.abs(z[..., 0]) ** 2 - np.abs(z[..., 1]) ** 2

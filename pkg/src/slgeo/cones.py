"""Laplace spectra of cone links, exponent sets and the stability index of SL cones.

For a cone C in C^m with link Sigma, homogeneous harmonic functions r^alpha v
correspond to eigenfunctions of Delta_Sigma with eigenvalue alpha (alpha + m - 2).
"""
import enum
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, GeometryError, InconsistencyError, NormalizationError

ANALYTIC_GROUP_RTOL = 1e-6
MESH_GROUP_RTOL = 1e-3


# --- links ----------------------------------------------------------------------

@dataclass(frozen=True)
class FlatTorus:
    """Flat torus R^2 / Lambda; rows of ``lattice`` are a basis of Lambda."""

    lattice: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.lattice, dtype=float)
        if L.shape != (2, 2) or abs(np.linalg.det(L)) <= 1e-12 * max(1.0, np.abs(L).max() ** 2):
            raise GeometryError("lattice basis must be a nondegenerate 2x2 matrix")
        object.__setattr__(self, "lattice", L)

    @property
    def area(self):
        return float(abs(np.linalg.det(self.lattice)))


@dataclass(frozen=True)
class RoundSphere:
    dim: int
    radius: float = 1.0
    components: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.radius <= 0 or self.components < 1:
            raise GeometryError("sphere needs dim >= 1, radius > 0, components >= 1")


@dataclass(frozen=True)
class MeshLink:
    """Triangulated closed surface in R^n (vertices (nv, n), triangles (nt, 3))."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        T = np.asarray(self.triangles, dtype=np.int64)
        if V.ndim != 2 or T.ndim != 2 or T.shape[1] != 3:
            raise GeometryError("vertices must be (nv, n) and triangles (nt, 3)")
        if T.min() < 0 or T.max() >= len(V):
            raise GeometryError("triangle index out of range")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "triangles", T)
        _check_watertight(T)
        if np.any(_triangle_areas(V, T) <= 0):
            raise GeometryError("mesh has degenerate triangles")


class LinkKind(enum.Enum):
    FLAT_TORUS = "flat_torus"
    ROUND_SPHERE = "round_sphere"
    MESH = "mesh"


def link_kind(link):
    if isinstance(link, FlatTorus):
        return LinkKind.FLAT_TORUS
    if isinstance(link, RoundSphere):
        return LinkKind.ROUND_SPHERE
    if isinstance(link, MeshLink):
        return LinkKind.MESH
    raise GeometryError(f"unknown link type {type(link).__name__}")


def _check_watertight(T):
    """Every directed edge must appear once and its reverse once (closed, consistently oriented)."""
    e = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    nv = int(T.max()) + 1
    code = e[:, 0] * nv + e[:, 1]
    rev = e[:, 1] * nv + e[:, 0]
    if len(np.unique(code)) != len(code):
        raise GeometryError("mesh is not consistently oriented (repeated directed edge)")
    if not np.all(np.isin(rev, code)):
        raise GeometryError("mesh is not watertight (boundary edge found)")


def _triangle_areas(V, T):
    a = V[T[:, 1]] - V[T[:, 0]]
    b = V[T[:, 2]] - V[T[:, 0]]
    aa, bb, ab = np.sum(a * a, 1), np.sum(b * b, 1), np.sum(a * b, 1)
    return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))


def read_off(path):
    """Read a triangle mesh in OFF format."""
    with open(path) as fh:
        toks = [ln.split("#")[0].split() for ln in fh]
    toks = [t for t in toks if t]
    if not toks or toks[0][0].upper() != "OFF":
        raise GeometryError(f"{path}: missing OFF header")
    head = toks[0][1:] if len(toks[0]) > 1 else toks[1]
    start = 1 if len(toks[0]) > 1 else 2
    nv, nf = int(head[0]), int(head[1])
    V = np.array([list(map(float, t)) for t in toks[start:start + nv]])
    F = []
    for t in toks[start + nv:start + nv + nf]:
        if int(t[0]) != 3:
            raise GeometryError(f"{path}: only triangular faces are supported")
        F.append(list(map(int, t[1:4])))
    return MeshLink(V, np.array(F))


def write_off(path, link):
    with open(path, "w") as fh:
        fh.write(f"OFF\n{len(link.vertices)} {len(link.triangles)} 0\n")
        for v in link.vertices:
            fh.write(" ".join(format(x, ".17g") for x in v) + "\n")
        for t in link.triangles:
            fh.write("3 " + " ".join(map(str, t)) + "\n")


# --- presets ------------------------------------------------------------------------

def clifford_lattice():
    """Lattice of the link of the T^2-cone, as a flat torus in Euclidean R^2.

    The link is parametrized by (theta1, theta2) in R^2 / 2 pi Z^2 through
    (1/sqrt 3)(e^{i theta1}, e^{i theta2}, e^{-i(theta1 + theta2)}). The induced
    metric G = J^T J is constant; with G = L^T L (Cholesky) the map theta -> L theta
    is an isometry onto Euclidean R^2, so the lattice is spanned by 2 pi L e_1, 2 pi L e_2.
    """
    th = np.array([0.3, -1.1])  # G is constant, any point works
    J = np.zeros((6, 2))
    ph = np.array([th[0], th[1], -th[0] - th[1]])
    dph = np.array([[1, 0], [0, 1], [-1, -1]], dtype=float)
    dz = (1j * np.exp(1j * ph) / np.sqrt(3))[:, None] * dph
    J[0::2], J[1::2] = dz.real, dz.imag
    G = J.T @ J
    L = np.linalg.cholesky(G).T
    return 2 * np.pi * L.T


def _reduce_basis(B):
    """Lagrange-Gauss reduction of a 2D lattice basis (rows)."""
    b1, b2 = B[0].copy(), B[1].copy()
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
    while True:
        mu = np.round((b1 @ b2) / (b1 @ b1))
        b2 = b2 - mu * b1
        if b2 @ b2 >= b1 @ b1 - 1e-14 * (b1 @ b1):
            return np.array([b1, b2])
        b1, b2 = b2, b1


def torus_mesh(torus, n=64):
    """Periodic triangulation of a flat torus, isometrically embedded in R^6.

    Coordinates theta in [0, 2 pi)^2 with p = (theta1 b1 + theta2 b2) / (2 pi); the
    metric G in theta is matched by (c1 e^{i theta1}, c2 e^{i theta2}, c3 e^{i(theta1 +- theta2)})
    after lattice reduction. Cells are split along the shorter diagonal.
    """
    B = _reduce_basis(torus.lattice)
    G = B @ B.T / (4 * np.pi ** 2)
    s = 1.0 if G[0, 1] >= 0 else -1.0
    c3 = abs(G[0, 1])
    c = np.sqrt(np.maximum([G[0, 0] - c3, G[1, 1] - c3, c3], 0.0))
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    T1, T2 = T1.ravel(), T2.ravel()
    z = np.stack([c[0] * np.exp(1j * T1), c[1] * np.exp(1j * T2), c[2] * np.exp(1j * (T1 + s * T2))], axis=1)
    V = np.empty((n * n, 6))
    V[:, 0::2], V[:, 1::2] = z.real, z.imag
    return MeshLink(V, _grid_triangles(n, diagonal="anti" if s > 0 else "main"))


def _grid_triangles(n, diagonal="anti"):
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()
    idx = lambda a, b: (a % n) * n + (b % n)
    v00, v10, v01, v11 = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
    if diagonal == "anti":
        T = np.concatenate([np.column_stack([v00, v10, v01]), np.column_stack([v10, v11, v01])])
    else:
        T = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    return T


def clifford_mesh(n=100):
    """Link of the T^2-cone, (1/sqrt 3)(e^{i t1}, e^{i t2}, e^{-i(t1 + t2)}), on an n x n grid in R^6.

    The (1,0)-(0,1) diagonal makes every triangle equilateral in the induced metric.
    """
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    T1, T2 = T1.ravel(), T2.ravel()
    z = np.stack([np.exp(1j * T1), np.exp(1j * T2), np.exp(-1j * (T1 + T2))], axis=1) / np.sqrt(3)
    V = np.empty((n * n, 6))
    V[:, 0::2], V[:, 1::2] = z.real, z.imag
    return MeshLink(V, _grid_triangles(n, "anti"))


def square_torus_mesh(n=64):
    """Square torus of side 2 pi embedded as (cos x, sin x, cos y, sin y)."""
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    X, Y = np.meshgrid(t, t, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    V = np.column_stack([np.cos(X), np.sin(X), np.cos(Y), np.sin(Y)])
    return MeshLink(V, _grid_triangles(n, "anti"))


# --- spectra ------------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues (ascending) with multiplicities."""

    values: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.multiplicities, dtype=np.int64)
        if v.shape != m.shape or v.ndim != 1 or len(v) == 0:
            raise ValueError("values and multiplicities must be matching nonempty 1-D arrays")
        if np.any(np.diff(v) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if np.any(m < 1):
            raise ValueError("multiplicities must be >= 1")
        if v[0] < 0 and abs(v[0]) > 1e-8:
            raise ValueError("Laplace eigenvalues are nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", m)

    def __iter__(self):
        return iter(zip(self.values.tolist(), self.multiplicities.tolist()))

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_list(cls, pairs):
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=float), np.array([p[1] for p in pairs]))


def group_eigenvalues(evals, rtol, atol=1e-9):
    """Group sorted eigenvalues whose gap is within tolerance; group value is the mean."""
    ev = np.sort(np.asarray(evals, dtype=float))
    vals, mults = [], []
    start = 0
    for k in range(1, len(ev) + 1):
        if k == len(ev) or ev[k] - ev[k - 1] > atol + rtol * abs(ev[k]):
            vals.append(ev[start:k].mean())
            mults.append(k - start)
            start = k
    vals = np.array(vals)
    vals[np.abs(vals) < atol] = 0.0
    return Spectrum(vals, np.array(mults))


def _torus_spectrum(torus, count):
    dual = np.linalg.inv(torus.lattice).T
    smin = np.linalg.svd(dual, compute_uv=False)[-1]
    R = 2
    while True:
        k = np.arange(-R, R + 1)
        K = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2)
        mu = K @ dual
        lam = 4 * np.pi ** 2 * np.sum(mu * mu, axis=1)
        lam.sort()
        if len(lam) >= count:
            thr = lam[count - 1]
            # every mu with 4 pi^2 |mu|^2 <= thr has |k| <= |mu| / smin
            if np.sqrt(thr) / (2 * np.pi) / smin < R:
                keep = lam <= thr * (1 + 1e-9) + 1e-12
                return group_eigenvalues(lam[keep], ANALYTIC_GROUP_RTOL)
        R *= 2


def _sphere_spectrum(s, count):
    vals, mults = [], []
    total, k = 0, 0
    while total < count:
        mult = (comb(s.dim + k, s.dim) - (comb(s.dim + k - 2, s.dim) if k >= 2 else 0)) * s.components
        vals.append(k * (k + s.dim - 1) / s.radius ** 2)
        mults.append(mult)
        total += mult
        k += 1
    return Spectrum(np.array(vals, dtype=float), np.array(mults))


def fem_matrices(link, lumped=False):
    """P1 stiffness (cotangent) and mass matrices of a triangle mesh in R^n.

    The mass matrix is consistent unless ``lumped``, in which case it is the
    diagonal of barycentric vertex areas.
    """
    V, T = link.vertices, link.triangles
    nv = len(V)
    K_rows, K_cols, K_vals = [], [], []
    area = _triangle_areas(V, T)
    for k in range(3):
        i, j, o = T[:, (k + 1) % 3], T[:, (k + 2) % 3], T[:, k]
        a, b = V[i] - V[o], V[j] - V[o]
        cot = np.sum(a * b, 1) / (2 * area)
        K_rows += [i, j, i, j]
        K_cols += [j, i, i, j]
        K_vals += [-0.5 * cot, -0.5 * cot, 0.5 * cot, 0.5 * cot]
    K = sp.csr_matrix((np.concatenate(K_vals), (np.concatenate(K_rows), np.concatenate(K_cols))), shape=(nv, nv))
    if lumped:
        m = np.zeros(nv)
        for p in range(3):
            np.add.at(m, T[:, p], area / 3)
        return K, sp.diags(m).tocsr()
    M_rows, M_cols, M_vals = [], [], []
    for p in range(3):
        for q in range(3):
            M_rows.append(T[:, p])
            M_cols.append(T[:, q])
            M_vals.append(area / (6.0 if p == q else 12.0))
    M = sp.csr_matrix((np.concatenate(M_vals), (np.concatenate(M_rows), np.concatenate(M_cols))), shape=(nv, nv))
    return K, M


def mesh_eigenpairs(link, count, tol=1e-9, lumped=False):
    """Lowest ``count`` eigenpairs of K x = lambda M x by shift-invert Lanczos."""
    K, M = fem_matrices(link, lumped)
    count = min(count, len(link.vertices) - 1)
    w, X = spla.eigsh(K.tocsc(), k=count, M=M.tocsc(), sigma=-1e-3, which="LM", tol=tol)
    order = np.argsort(w)
    return np.clip(w[order], 0, None), X[:, order]


def link_spectrum(link, count, lumped=False):
    """Lowest eigenvalues of the link Laplacian grouped with multiplicities.

    Parameters
    ----------
    link : FlatTorus, RoundSphere or MeshLink
    count : int
        Number of eigenvalues (with multiplicity) to compute. Analytic spectra are
        extended to complete the last eigenvalue group.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    kind = link_kind(link)
    if kind is LinkKind.FLAT_TORUS:
        return _torus_spectrum(link, count)
    if kind is LinkKind.ROUND_SPHERE:
        return _sphere_spectrum(link, count)
    w, _ = mesh_eigenpairs(link, count, lumped=lumped)
    return group_eigenvalues(w, MESH_GROUP_RTOL, atol=1e-8)


# --- exponents and counts -------------------------------------------------------------

def _roots(lam, m):
    d = np.sqrt((m - 2) ** 2 + 4 * lam)
    return (-(m - 2) + d) / 2, (-(m - 2) - d) / 2


def exponents(spectrum, m, range=(-np.inf, np.inf)):
    """Exponents alpha with alpha (alpha + m - 2) an eigenvalue, inside the closed interval ``range``.

    Returns a list of (alpha, multiplicity) sorted by alpha.
    """
    if m <= 2:
        raise DomainError("exponents need m > 2")
    lo, hi = range
    out = {}
    for lam, mult in spectrum:
        for al in set(_roots(lam, m)):
            if lo <= al <= hi:
                key = round(al, 12)
                out[key] = out.get(key, 0) + mult
    return sorted(out.items())


def count_N(spectrum, m, delta, atol=1e-9, rtol=0.0):
    """Counting function: -sum m(alpha) over alpha in (delta, 0) for delta < 0,
    sum m(alpha) over alpha in [0, delta] for delta >= 0.

    ``atol``/``rtol`` widen the comparison with delta, so that exponents computed
    from approximate (mesh) spectra within the grouping tolerance of delta count.
    """
    if m <= 2:
        raise DomainError("count_N needs m > 2")
    tol = atol + rtol * abs(delta)
    total = 0
    for lam, mult in spectrum:
        for al in set(_roots(lam, m)):
            if delta >= 0 and -atol <= al <= delta + tol:
                total += mult
            elif delta < 0 and delta < al < -atol:
                total -= mult
    return int(total)


@dataclass(frozen=True)
class ConeData:
    m: int
    b0_link: int
    dim_G: int
    spectrum: Spectrum

    def __post_init__(self):
        if self.m <= 2:
            raise DomainError("cone data needs m > 2")
        if self.b0_link < 1 or self.dim_G < 0:
            raise DomainError("need b0_link >= 1 and dim_G >= 0")


def stability_index(cone, atol=1e-9, rtol=0.0):
    """s-ind = N(2) - b0 - m^2 - 2m + 1 + dim G; the cone is stable iff it is 0."""
    N2 = count_N(cone.spectrum, cone.m, 2.0, atol, rtol)
    s = N2 - cone.b0_link - cone.m ** 2 - 2 * cone.m + 1 + cone.dim_G
    if s < 0:
        raise InconsistencyError(f"negative stability index {s}: spectrum or dim G inconsistent (N(2) = {N2})")
    return int(s)


def floors_hold(cone):
    """Lower bounds on the multiplicities of alpha = 0, 1, 2 for cone links."""
    spec, m = cone.spectrum, cone.m
    mult = {round(lam, 9): k for lam, k in spec}
    m0 = mult.get(0.0, 0)
    m1 = mult.get(round(1.0 * (1 + m - 2), 9), 0)
    m2 = mult.get(round(2.0 * (2 + m - 2), 9), 0)
    return m0 == cone.b0_link and m1 >= 2 * m and m2 >= m * m - 1 - cone.dim_G


def homogeneous_harmonic_residual(link, v, alpha, m):
    """||Delta_Sigma v - alpha(alpha + m - 2) v||_M / ||v||_M on a mesh link (mass-matrix norms)."""
    if link_kind(link) is not LinkKind.MESH:
        raise GeometryError("a mesh link is required; use torus_mesh or clifford_mesh")
    K, M = fem_matrices(link)
    v = np.asarray(v, dtype=float)
    nv = float(np.sqrt(v @ (M @ v)))
    if nv == 0:
        raise NormalizationError("v must not vanish identically")
    Lv = spla.spsolve(M.tocsc(), K @ v)
    r = Lv - alpha * (alpha + m - 2) * v
    return float(np.sqrt(r @ (M @ r)) / nv)


def clifford_cone(count=40):
    """T^2-cone in C^3: flat-torus link from ``clifford_lattice``, b0 = 1, dim G = 2."""
    return ConeData(3, 1, 2, link_spectrum(FlatTorus(clifford_lattice()), count))


def so3_pair_cone(count=40):
    """Union of two SL 3-planes: link two unit 2-spheres, b0 = 2, dim G = 3."""
    return ConeData(3, 2, 3, link_spectrum(RoundSphere(2, 1.0, components=2), count))


PRESETS = {
    "clifford-t2": (clifford_cone, lambda: FlatTorus(clifford_lattice())),
    "so3-pair": (so3_pair_cone, lambda: RoundSphere(2, 1.0, 2)),
}

"""U(1)-invariant special Lagrangian 3-folds from the planar elliptic problem.

A solution f of

    P(f) = (f_x^2 + y^2 + a^2)^(-1/2) f_xx + 2 f_yy = 0

on a convex domain S, symmetric under y -> -y, gives u = f_y, v = f_x solving the
nonlinear Cauchy-Riemann system

    u_x = v_y,   v_x = -2 (v^2 + y^2 + a^2)^(1/2) u_y,

and the 3-fold {z1 z2 = v + i y, z3 = x + i u, |z1|^2 - |z2|^2 = 2a} is special Lagrangian.

Discretization: 5-point finite differences on a grid with nodes (i h, (j + 1/2) h).
Offsetting the rows keeps y != 0 at every node, so the coefficient stays bounded
by 2/h and the discrete problem remains regular as a -> 0. Where a grid line
leaves S the stencil arm is cut at the exact boundary crossing (Shortley-Weller).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator
from scipy.ndimage import label
from scipy.optimize import brentq

from . import kernels
from .calib import to_real
from .errors import ConvergenceError, DegeneracyError, DomainError
from .families import SampleCloud, frames_from

SOLVER_TOL = 1e-8
CONTINUATION_TOL = 1e-6
CAUCHY_TOL = 1e-6


# --- domains -----------------------------------------------------------------

class Ellipse:
    """Ellipse (x - cx)^2/ax^2 + (y - cy)^2/ay^2 < 1."""

    def __init__(self, ax=1.0, ay=None, cx=0.0, cy=0.0):
        self.ax = float(ax)
        self.ay = float(ax if ay is None else ay)
        self.cx, self.cy = float(cx), float(cy)
        if self.ax <= 0 or self.ay <= 0:
            raise DomainError("ellipse semi-axes must be positive")

    def level(self, x, y):
        return ((x - self.cx) / self.ax) ** 2 + ((y - self.cy) / self.ay) ** 2 - 1.0

    def bbox(self):
        return (self.cx - self.ax, self.cx + self.ax, self.cy - self.ay, self.cy + self.ay)

    def crossing(self, x, y, axis, sign):
        """Boundary coordinate reached from an interior point along a grid line."""
        if axis == 0:
            return self.cx + sign * self.ax * np.sqrt(max(0.0, 1 - ((y - self.cy) / self.ay) ** 2))
        return self.cy + sign * self.ay * np.sqrt(max(0.0, 1 - ((x - self.cx) / self.ax) ** 2))

    def boundary(self, n):
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        pts = np.column_stack([self.cx + self.ax * np.cos(t), self.cy + self.ay * np.sin(t)])
        nrm = np.column_stack([np.cos(t) / self.ax, np.sin(t) / self.ay])
        return pts, nrm / np.linalg.norm(nrm, axis=1, keepdims=True)


class StarDomain:
    """Star-shaped domain r < rho(phi) in polar coordinates about the origin."""

    def __init__(self, rho):
        self.rho = rho
        phis = np.linspace(0, 2 * np.pi, 721)
        self._rmax = float(np.max(rho(phis)))

    def level(self, x, y):
        return np.hypot(x, y) - self.rho(np.arctan2(y, x))

    def bbox(self):
        r = self._rmax
        return (-r, r, -r, r)

    def crossing(self, x, y, axis, sign):
        L = 2.5 * self._rmax
        if axis == 0:
            g = lambda s: self.level(x + sign * s, y)
            return x + sign * brentq(g, 0.0, L, xtol=1e-15)
        g = lambda s: self.level(x, y + sign * s)
        return y + sign * brentq(g, 0.0, L, xtol=1e-15)

    def boundary(self, n):
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        r = self.rho(t)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        tang = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
        nrm = np.column_stack([tang[:, 1], -tang[:, 0]])
        return pts, nrm / np.linalg.norm(nrm, axis=1, keepdims=True)


def disk(radius=1.0):
    return Ellipse(radius, radius)


# --- mesh --------------------------------------------------------------------

@dataclass
class DomainMesh:
    """Interior grid nodes of a planar domain with cut-cell stencil data.

    Attributes
    ----------
    vertices : ndarray (N, 2)
        Interior nodes (i h, (j + 1/2) h).
    ij : ndarray of int (N, 2)
        Grid indices of the nodes.
    h : float
    nbr : ndarray of int64 (N, 4)
        W, E, S, N neighbours; values >= N index ``bpoints``.
    arm : ndarray (N, 4)
        Distance to each neighbour (shorter than h at the boundary).
    bpoints : ndarray (nb, 2)
        Boundary crossing points carrying the Dirichlet data.
    boundary : ndarray (nbd, 2)
        Ordered boundary polyline (counterclockwise).
    normals : ndarray (nbd, 2)
        Outward unit normals of the polyline.
    """

    vertices: np.ndarray
    ij: np.ndarray
    h: float
    nbr: np.ndarray
    arm: np.ndarray
    bpoints: np.ndarray
    boundary: np.ndarray
    normals: np.ndarray
    domain: object = None

    @property
    def x(self):
        return self.vertices[:, 0]

    @property
    def y(self):
        return self.vertices[:, 1]

    @property
    def n(self):
        return len(self.vertices)

    @classmethod
    def build(cls, domain=None, h=1 / 16, validate=True):
        """Grid nodes strictly inside ``domain`` (default: unit disk) at spacing h."""
        domain = disk() if domain is None else domain
        if not h > 0:
            raise DomainError("spacing h must be positive")
        x0, x1, y0, y1 = domain.bbox()
        i = np.arange(int(np.floor(x0 / h)) - 1, int(np.ceil(x1 / h)) + 2)
        j = np.arange(int(np.floor(y0 / h - 0.5)) - 1, int(np.ceil(y1 / h - 0.5)) + 2)
        I, J = np.meshgrid(i, j, indexing="ij")
        X, Y = I * h, (J + 0.5) * h
        inside = domain.level(X, Y) < -1e-12
        if not inside.any():
            raise DomainError("no grid nodes inside the domain; decrease h")
        num = -np.ones(X.shape, dtype=np.int64)
        num[inside] = np.arange(inside.sum())
        loc = np.argwhere(inside)
        N = len(loc)
        nbr = np.zeros((N, 4), dtype=np.int64)
        arm = np.zeros((N, 4))
        bpts = []
        for k, (p, q) in enumerate(loc):
            for d, (dp, dq) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
                if inside[p + dp, q + dq]:
                    nbr[k, d] = num[p + dp, q + dq]
                    arm[k, d] = h
                    continue
                px, py = X[p, q], Y[p, q]
                if dp:
                    xb = domain.crossing(px, py, 0, dp)
                    bpts.append((xb, py))
                    arm[k, d] = abs(xb - px)
                else:
                    yb = domain.crossing(px, py, 1, dq)
                    bpts.append((px, yb))
                    arm[k, d] = abs(yb - py)
                nbr[k, d] = N + len(bpts) - 1
        if np.any(arm <= 0):
            raise DomainError("degenerate stencil arm; perturb h")
        nb = max(64, int(np.ceil(8 * np.pi / h)))
        bnd, nrm = domain.boundary(nb)
        mesh = cls(np.column_stack([X[inside], Y[inside]]), np.column_stack([I[inside], J[inside]]), float(h),
                   nbr, arm, np.array(bpts), bnd, nrm, domain)
        if validate:
            mesh.validate()
        return mesh

    def validate(self, tol=1e-12):
        """Check y -> -y symmetry of the node set and strict convexity of the boundary."""
        key = {(int(a), int(b)) for a, b in self.ij}
        if any((a, -b - 1) not in key for a, b in key):
            raise DomainError("domain is not symmetric under (x, y) -> (x, -y)")
        P = self.boundary
        e1 = np.roll(P, -1, axis=0) - P
        e0 = P - np.roll(P, 1, axis=0)
        cr = e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0]
        if not np.all(cr > tol * np.linalg.norm(e0, axis=1) * np.linalg.norm(e1, axis=1)):
            raise DomainError("domain boundary is not strictly convex")

    def to_grid(self, values):
        """Embed per-vertex values into a rectangular array (NaN outside); returns (xs, ys, G)."""
        i0, j0 = self.ij.min(axis=0)
        i1, j1 = self.ij.max(axis=0)
        values = np.asarray(values)
        dtype = complex if np.iscomplexobj(values) else float
        G = np.full((i1 - i0 + 1, j1 - j0 + 1), np.nan, dtype=dtype)
        G[self.ij[:, 0] - i0, self.ij[:, 1] - j0] = values
        xs = np.arange(i0, i1 + 1) * self.h
        ys = (np.arange(j0, j1 + 1) + 0.5) * self.h
        return xs, ys, G

    def interpolator(self, values, method="linear"):
        xs, ys, G = self.to_grid(values)
        return RegularGridInterpolator((xs, ys), G, method=method, bounds_error=False, fill_value=np.nan)


# --- fields --------------------------------------------------------------------

@dataclass
class PotentialField:
    """Discrete potential f on the mesh with parameter a and boundary data phi_b."""

    mesh: DomainMesh
    f: np.ndarray
    a: float
    phi_b: np.ndarray
    info: dict = field(default_factory=dict)

    def values_with_boundary(self):
        return np.concatenate([self.f, self.phi_b])


@dataclass
class UVField:
    """Per-vertex u, v on the mesh with parameter a."""

    mesh: DomainMesh
    u: np.ndarray
    v: np.ndarray
    a: float


@dataclass(frozen=True)
class SingularPoint:
    location: tuple
    multiplicity: int
    type_tag: str

    def __post_init__(self):
        if self.location[1] != 0:
            raise ValueError("singular points lie on the x-axis")


@dataclass(frozen=True)
class WholeAxisSingular:
    """v vanishes along the whole discrete x-axis."""

    x_range: tuple


@dataclass(frozen=True)
class Zero:
    location: tuple
    multiplicity: int


class ZeroList(list):
    @property
    def total(self):
        return int(sum(z.multiplicity for z in self))


# --- operator ------------------------------------------------------------------

def _boundary_values(mesh, phi):
    if callable(phi):
        vals = np.asarray(phi(mesh.bpoints[:, 0], mesh.bpoints[:, 1]), dtype=float)
        return np.broadcast_to(vals, (len(mesh.bpoints),)).copy()
    vals = np.asarray(phi, dtype=float)
    if vals.shape != (len(mesh.bpoints),):
        raise DomainError(f"boundary table must have {len(mesh.bpoints)} entries")
    return vals.copy()


def _assemble(mesh, J):
    N = mesh.n
    cols = np.concatenate([np.arange(N)[:, None], mesh.nbr], axis=1).ravel()
    rows = np.repeat(np.arange(N), 5)
    keep = cols < N
    return sp.csr_matrix((J.ravel()[keep], (rows[keep], cols[keep])), shape=(N, N))


def operator_residual(mesh, f, phi_b, a):
    """Discrete P(f) at every interior vertex."""
    r, _ = kernels.quasilinear_stencil(np.concatenate([f, phi_b]), mesh.nbr, mesh.arm, mesh.y, a)
    return r


def residual(field):
    return operator_residual(field.mesh, field.f, field.phi_b, field.a)


def harmonic_extension(mesh, phi_b):
    """Solution of f_xx + f_yy = 0 with the given boundary values (initial Newton guess)."""
    N = mesh.n
    hw, he, hs, hn = mesh.arm.T
    sx, sy = hw + he, hs + hn
    J = np.column_stack([-2 / sx * (1 / he + 1 / hw) - 2 / sy * (1 / hn + 1 / hs),
                         2 / (sx * hw), 2 / (sx * he), 2 / (sy * hs), 2 / (sy * hn)])
    A = _assemble(mesh, J)
    F = np.concatenate([np.zeros(N), phi_b])
    rhs = -sum(J[:, d + 1] * np.where(mesh.nbr[:, d] >= N, F[mesh.nbr[:, d]], 0.0) for d in range(4))
    return spla.spsolve(A.tocsc(), rhs)


def _newton(mesh, f, phi_b, a, tol, max_iter):
    nr = np.inf
    for it in range(max_iter + 1):
        F = np.concatenate([f, phi_b])
        r, J = kernels.quasilinear_stencil(F, mesh.nbr, mesh.arm, mesh.y, a)
        nr = np.abs(r).max()
        if nr <= tol:
            return f, it, nr
        if it == max_iter:
            break
        d = spla.spsolve(_assemble(mesh, J).tocsc(), -r)
        lam = 1.0
        while True:
            fn = f + lam * d
            rn = np.abs(operator_residual(mesh, fn, phi_b, a)).max()
            if rn < (1 - 1e-4 * lam) * nr:
                break
            lam *= 0.5
            if lam < 1e-6:
                raise ConvergenceError(f"line search failed at residual {nr:.3g}", nr, it)
        f = fn
    raise ConvergenceError(f"Newton did not reach {tol:.1e} in {max_iter} iterations (residual {nr:.3g})", nr, max_iter)


def solve_dirichlet(mesh, phi, a, f0=None, tol=None, max_iter=50, k_max=40):
    """Solve P(f) = 0 with f = phi on the boundary.

    Parameters
    ----------
    mesh : DomainMesh
    phi : callable(x, y) or array of boundary-crossing values
    a : float
        a != 0 is solved directly. a = 0 is reached by continuation through
        a_k = 2^-k, stopping once successive iterates differ by < 1e-6 in
        sup-norm, followed by a Newton polish at a = 0.
    f0 : callable or array, optional
        Initial guess; default is the harmonic extension of phi.
    tol : float, optional
        Newton tolerance on max |P(f)| (default 1e-8).

    Returns
    -------
    PotentialField
        ``info`` records iterations, final residual and the continuation history.
    """
    mesh.validate()
    phi_b = _boundary_values(mesh, phi)
    if f0 is None:
        f = harmonic_extension(mesh, phi_b)
    elif callable(f0):
        f = np.asarray(f0(mesh.x, mesh.y), dtype=float) * np.ones(mesh.n)
    else:
        f = np.asarray(f0, dtype=float).copy()
    tol = SOLVER_TOL if tol is None else tol
    a = float(a)
    if a != 0:
        f, it, nr = _newton(mesh, f, phi_b, a, tol, max_iter)
        return PotentialField(mesh, f, a, phi_b, dict(iterations=it, residual=nr))
    history = []
    prev = None
    converged = False
    for k in range(k_max + 1):
        ak = 2.0 ** -k
        f, it, nr = _newton(mesh, f, phi_b, ak, SOLVER_TOL if ak >= 1e-2 else CONTINUATION_TOL, max_iter)
        diff = np.inf if prev is None else float(np.abs(f - prev).max())
        history.append(dict(a=ak, sup_diff=diff, residual=float(nr), iterations=it))
        if diff < CAUCHY_TOL:
            converged = True
            break
        prev = f.copy()
    info = dict(continuation=history, cauchy_converged=converged, cauchy_tail=history[-1]["sup_diff"])
    try:
        f, it, nr = _newton(mesh, f, phi_b, 0.0, tol, max_iter)
        info.update(iterations=it, residual=nr, polished=True)
    except ConvergenceError as exc:
        info.update(residual=exc.residual, polished=False)
    if not converged:
        raise ConvergenceError(f"a-continuation did not settle: last sup-norm difference {history[-1]['sup_diff']:.3g}",
                               history[-1]["sup_diff"], len(history))
    return PotentialField(mesh, f, 0.0, phi_b, info)


# --- u, v ----------------------------------------------------------------------

def _first_derivs(mesh, F):
    N = mesh.n
    f = F[:N]
    fw, fe, fs, fn = (F[mesh.nbr[:, d]] for d in range(4))
    hw, he, hs, hn = mesh.arm.T
    fx = (hw * hw * fe - he * he * fw + (he * he - hw * hw) * f) / (hw * he * (hw + he))
    fy = (hs * hs * fn - hn * hn * fs + (hn * hn - hs * hs) * f) / (hs * hn * (hs + hn))
    return fx, fy


def potential_to_uv(field):
    """u = D_y f, v = D_x f by second-order (cut-cell aware) central differences."""
    fx, fy = _first_derivs(field.mesh, field.values_with_boundary())
    return UVField(field.mesh, fy, fx, field.a)


def _grad_interior(mesh, g):
    """Derivatives of a vertex function: central where both neighbours are interior, else one-sided."""
    N = mesh.n
    h = mesh.h
    out = []
    for lo, hi in ((0, 1), (2, 3)):
        il, ih = mesh.nbr[:, lo], mesh.nbr[:, hi]
        okl, okh = il < N, ih < N
        gl = np.where(okl, g[np.minimum(il, N - 1)], g)
        gh = np.where(okh, g[np.minimum(ih, N - 1)], g)
        den = h * (okl.astype(float) + okh.astype(float))
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(den > 0, (gh - gl) / den, 0.0)
        out.append(d)
    return out


def cr_residual(field):
    """Residuals (u_x - v_y, v_x + 2 (v^2 + y^2 + a^2)^(1/2) u_y) at interior vertices.

    Evaluated with central differences where all four neighbours are interior
    vertices; NaN elsewhere.
    """
    mesh = field.mesh
    N = mesh.n
    deep = np.all(mesh.nbr < N, axis=1)
    ux, uy = _grad_interior(mesh, field.u)
    vx, vy = _grad_interior(mesh, field.v)
    r1 = ux - vy
    r2 = vx + 2 * np.sqrt(field.v ** 2 + mesh.y ** 2 + field.a ** 2) * uy
    r1[~deep] = np.nan
    r2[~deep] = np.nan
    return r1, r2


# --- singular points and zeros -------------------------------------------------

def _winding(values):
    """Winding number of a closed sequence of complex values."""
    ang = np.angle(values)
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return d.sum() / (2 * np.pi)


def _circle_winding(mesh, du, dv, center, radius, n=128):
    iu = mesh.interpolator(du)
    iv = mesh.interpolator(dv)
    r = radius
    while r >= 0.99 * mesh.h:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        pts = np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])
        w = iu(pts) + 1j * iv(pts)
        if np.all(np.isfinite(w)) and np.all(w != 0):
            return int(round(_winding(w)))
        r *= 0.75
    return None


def _axis_values(mesh, g):
    """Average of the two rows y = +-h/2, indexed by column."""
    lo = mesh.ij[:, 1] == -1
    hi = mesh.ij[:, 1] == 0
    a = dict(zip(mesh.ij[lo, 0], g[lo]))
    b = dict(zip(mesh.ij[hi, 0], g[hi]))
    cols = np.array(sorted(set(a) & set(b)))
    return cols * mesh.h, np.array([0.5 * (a[c] + b[c]) for c in cols])


def detect_singular_points(field, tol=1e-10):
    """Singular points (x, 0) of a field with a = 0: zeros of v along the x-axis.

    Multiplicity is the winding number of (u, v) on a circle of radius 3h about the
    zero. The type tag records the local parity of v along the axis: "odd" when v
    changes sign through the zero, "even" when it touches zero without changing sign.
    For a != 0 the list is empty.
    """
    if field.a != 0:
        return []
    mesh = field.mesh
    xs, va = _axis_values(mesh, field.v)
    scale = 1.0 + np.abs(field.v).max()
    if np.all(np.abs(va) <= tol * scale):
        return WholeAxisSingular((float(xs.min()), float(xs.max())))
    out = []
    found = []
    small = np.abs(va) <= tol * scale
    for i in range(len(xs) - 1):
        v0, v1 = va[i], va[i + 1]
        if v0 * v1 < 0 and not small[i] and not small[i + 1]:
            found.append((xs[i] - v0 * (xs[i + 1] - xs[i]) / (v1 - v0), "odd"))
    for i in range(1, len(xs) - 1):
        if small[i] and not small[i - 1] and not small[i + 1]:
            found.append((xs[i], "even" if va[i - 1] * va[i + 1] > 0 else "odd"))
    for x0, tag in found:
        w = _circle_winding(mesh, field.u, field.v, (x0, 0.0), 3 * mesh.h)
        mult = abs(w) if w else 1
        out.append(SingularPoint((float(x0), 0.0), int(mult), tag))
    return out


def count_zeros(f1, f2):
    """Zeros of (u1 - u2, v1 - v2) in the interior with winding-number multiplicities.

    Cells whose corner values wind around 0 are grouped into clusters; each
    cluster's multiplicity is the winding on a circle of radius 3h about its centroid
    (falling back to the sum of cell windings near the boundary).
    """
    if f1.mesh is not f2.mesh and (f1.mesh.n != f2.mesh.n or not np.array_equal(f1.mesh.vertices, f2.mesh.vertices)):
        raise DomainError("fields live on different meshes")
    if f1.a != f2.a:
        raise DomainError("fields have different a")
    du, dv = f1.u - f2.u, f1.v - f2.v
    if np.all(du == 0) and np.all(dv == 0):
        raise DegeneracyError("identical fields have no isolated zeros")
    mesh = f1.mesh
    xs, ys, G = mesh.to_grid(du + 1j * dv)
    c = [G[:-1, :-1], G[1:, :-1], G[1:, 1:], G[:-1, 1:]]
    ok = np.all([np.isfinite(q) for q in c], axis=0)
    ang = [np.angle(np.where(ok, q, 1.0)) for q in c]
    wind = np.zeros(ok.shape)
    for k in range(4):
        d = ang[(k + 1) % 4] - ang[k]
        wind += (d + np.pi) % (2 * np.pi) - np.pi
    wind = np.rint(wind / (2 * np.pi)).astype(int) * ok
    lab, n = label(wind != 0, structure=np.ones((3, 3)))
    out = ZeroList()
    h = mesh.h
    for k in range(1, n + 1):
        idx = np.argwhere(lab == k)
        cx = float(np.mean(xs[idx[:, 0]]) + 0.5 * h)
        cy = float(np.mean(ys[idx[:, 1]]) + 0.5 * h)
        w = _circle_winding(mesh, du, dv, (cx, cy), 3 * h)
        if w is None:
            w = int(wind[lab == k].sum())
        if w != 0:
            out.append(Zero((cx, cy), int(w)))
    return out


# --- lift to C^3 ---------------------------------------------------------------

def lift_point(x, y, theta, u, v, a):
    """Point of the 3-fold: z1 z2 = v + i y, z3 = x + i u, |z1|^2 - |z2|^2 = 2a.

    theta is the phase of the factor whose modulus stays away from zero (z1 for
    a >= 0, conj z2 for a < 0); the other factor is w / (that factor). This keeps
    the map smooth in (theta, x, y) near the axis, where arg w turns quickly.
    """
    w = np.asarray(v) + 1j * np.asarray(y)
    w2 = np.abs(w) ** 2
    s = np.sqrt(a * a + w2)
    e = np.exp(1j * np.asarray(theta))
    big = np.sqrt(s + abs(a))
    with np.errstate(invalid="ignore", divide="ignore"):
        other = np.where(big > 0, w / np.where(big > 0, big, 1.0), 0.0)
    if a >= 0:
        z1, z2 = big * e, other / e
    else:
        z1, z2 = other * e, big / e
    z3 = np.asarray(x) + 1j * np.asarray(u)
    return to_real(np.stack(np.broadcast_arrays(z1, z2, z3), axis=-1))


def _lift_tangents(x, y, theta, u, v, a, du, dv):
    """Exact d/dtheta, d/dx, d/dy of ``lift_point`` given the derivatives du = (u_x, u_y), dv = (v_x, v_y)."""
    w = v + 1j * y
    s = np.sqrt(a * a + np.abs(w) ** 2)
    B = np.sqrt(s + abs(a))
    e = np.exp(1j * theta)
    out = []
    for dth, dx, dw, duu in ((1.0, 0.0, 0.0 * w, 0.0 * u), (0.0, 1.0, dv[0] + 0j, du[0]),
                             (0.0, 0.0, dv[1] + 1j, du[1])):
        dB = np.real(np.conj(w) * dw) / (2 * s * B)
        dq = dw / B - w * dB / B ** 2
        if a >= 0:
            d1 = e * (dB + 1j * B * dth)
            d2 = (dq - 1j * (w / B) * dth) / e
        else:
            d1 = e * (dq + 1j * (w / B) * dth)
            d2 = (dB - 1j * B * dth) / e
        d3 = dx + 1j * duu + 0 * w
        out.append(to_real(np.stack([d1, d2, d3], axis=-1)))
    return np.stack(out, axis=-2)


def lift_to_sl3(field, n_theta=8, frames=True):
    """Sample the 3-fold over every mesh vertex and n_theta points of the U(1) orbit.

    Frames are the exact derivatives of the lift composed with the local linear
    model of u and v at each vertex (central differences of u, v on the mesh).
    """
    mesh = field.mesh
    a = field.a
    ths = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    k = np.repeat(np.arange(mesh.n), n_theta)
    th = np.tile(ths, mesh.n)
    x0, y0 = mesh.x[k], mesh.y[k]
    pts = lift_point(x0, y0, th, field.u[k], field.v[k], a)
    if not frames:
        return SampleCloud(pts, None, None, dict(vertex=k))
    ux, uy = _grad_interior(mesh, field.u)
    vx, vy = _grad_interior(mesh, field.v)
    T = _lift_tangents(x0, y0, th, field.u[k], field.v[k], a, (ux[k], uy[k]), (vx[k], vy[k]))
    return SampleCloud(pts, frames_from(pts, T), None, dict(vertex=k))


def probe_field(mesh, values, points, box=0.7):
    """Cubic interpolation of vertex values at interior points.

    Only vertices in the central part of the bounding box (a fraction ``box`` of
    each half-width) enter the spline, so the NaN padding outside the domain cannot
    leak into it.
    """
    x0, x1, y0, y1 = mesh.domain.bbox()
    cx, cy, rx, ry = (x0 + x1) / 2, (y0 + y1) / 2, (x1 - x0) / 2, (y1 - y0) / 2
    m = (np.abs(mesh.x - cx) < box * rx) & (np.abs(mesh.y - cy) < box * ry)
    h = mesh.h
    ij = mesh.ij[m]
    i0, j0 = ij.min(axis=0)
    i1, j1 = ij.max(axis=0)
    G = np.full((i1 - i0 + 1, j1 - j0 + 1), np.nan)
    G[ij[:, 0] - i0, ij[:, 1] - j0] = np.asarray(values)[m]
    if np.isnan(G).any():
        raise DomainError("probe box is not fully covered by interior vertices; reduce box")
    xs = np.arange(i0, i1 + 1) * h
    ys = (np.arange(j0, j1 + 1) + 0.5) * h
    P = np.atleast_2d(points)
    return RectBivariateSpline(xs, ys, G, kx=3, ky=3, s=0).ev(P[:, 0], P[:, 1])


def convergence_order(phi, a, hs, points, domain=None):
    """Observed order from successive differences of solutions on the meshes ``hs`` (halving).

    Returns
    -------
    orders : ndarray, shape (len(hs) - 2,)
    diffs : ndarray, shape (len(hs) - 1,)
        Max difference at ``points`` between consecutive resolutions.
    """
    domain = disk(1.0) if domain is None else domain
    vals = []
    for h in hs:
        mesh = DomainMesh.build(domain, h)
        vals.append(probe_field(mesh, solve_dirichlet(mesh, phi, a).f, points))
    diffs = np.array([np.abs(vals[i] - vals[i + 1]).max() for i in range(len(vals) - 1)])
    ratios = np.array(hs[:-1]) / np.array(hs[1:])
    return np.log(diffs[:-1] / diffs[1:]) / np.log(ratios[1:]), diffs

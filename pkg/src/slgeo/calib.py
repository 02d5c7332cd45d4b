"""Flat Calabi-Yau structure on C^m and the calibration residuals built from it.

Real vectors use interleaved coordinates (Re z_1, Im z_1, ..., Re z_m, Im z_m).
With that convention

    g'(u, v)     = Re sum conj(u_j) v_j
    omega'(u, v) = Im sum conj(u_j) v_j
    Omega'(v_1, ..., v_m) = det_C [v_1 | ... | v_m]

so that omega'(e_x1, e_y1) = 1 and Re Omega' restricts to dx_1 ^ ... ^ dx_m on R^m.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidVolumeError, RankDeficiencyError

SL_TOL = 1e-10
GRAM_TOL = 1e-14


def to_complex(v):
    """Interleaved real array (..., 2m) -> complex array (..., m)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2:
        raise DimensionError(f"real coordinate length {v.shape[-1]} is odd")
    return v[..., 0::2] + 1j * v[..., 1::2]


def to_real(z):
    """Complex array (..., m) -> interleaved real array (..., 2m)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complex_point(*z):
    """Build a ComplexPoint (interleaved real 2m-vector) from complex coordinates."""
    if len(z) == 1 and np.ndim(z[0]) == 1:
        z = z[0]
    pt = to_real(np.asarray(z, dtype=complex))
    if len(pt) < 4:
        raise DimensionError("a point of C^m needs m >= 2")
    return pt


class FlatForms:
    """Evaluators for g', omega', Omega' on C^m (real 2m-vectors in, scalars out)."""

    def __init__(self, m):
        if int(m) != m or m < 2:
            raise DimensionError(f"ambient dimension m={m} must be an integer >= 2")
        self.m = int(m)

    def _cz(self, v):
        z = to_complex(v)
        if z.shape[-1] != self.m:
            raise DimensionError(f"expected real vectors of length {2 * self.m}")
        return z

    def g(self, u, v):
        return np.sum(np.conj(self._cz(u)) * self._cz(v), axis=-1).real

    def omega(self, u, v):
        return np.sum(np.conj(self._cz(u)) * self._cz(v), axis=-1).imag

    def Omega(self, *vecs):
        if len(vecs) != self.m:
            raise DimensionError(f"Omega' takes {self.m} vectors, got {len(vecs)}")
        Z = np.stack([self._cz(v) for v in vecs], axis=-1)
        return np.linalg.det(Z)

    def re_Omega(self, *vecs):
        return self.Omega(*vecs).real

    def im_Omega(self, *vecs):
        return self.Omega(*vecs).imag


def flat_forms(m):
    """Return the flat structure evaluators (g', omega', Re Omega', Im Omega') on C^m."""
    return FlatForms(m)


@dataclass(frozen=True)
class TangentFrame:
    """Base point plus m ordered tangent vectors (rows of ``vectors``) and an orientation sign."""

    base: np.ndarray
    vectors: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if base.ndim != 1 or len(base) % 2 or len(base) < 4:
            raise DimensionError("base must be a real 2m-vector with m >= 2")
        m = len(base) // 2
        if vecs.shape != (m, 2 * m):
            raise DimensionError(f"expected {m} tangent vectors of length {2 * m}, got {vecs.shape}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "vectors", vecs)

    @property
    def m(self):
        return len(self.base) // 2

    @classmethod
    def calibrated(cls, base, vectors):
        """Frame oriented so that Re Omega' is nonnegative on it."""
        vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
        s = np.sign(flat_forms(vecs.shape[0]).re_Omega(*vecs))
        return cls(base, vecs, 1 if s >= 0 else -1)


@dataclass(frozen=True)
class SLResidual:
    omega_norm: float
    im_omega_val: float
    calib_ratio: float
    tol: float = field(default=SL_TOL, compare=False)

    @property
    def is_sl(self):
        return self.omega_norm <= self.tol and abs(self.im_omega_val) <= self.tol

    def __iter__(self):
        return iter((self.omega_norm, self.im_omega_val, self.calib_ratio))


def orthonormalize(vectors):
    """Orientation-preserving Gram-Schmidt via QR; returns rows of an orthonormal frame."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise RankDeficiencyError("frame contains a zero vector")
    Vn = V / norms[:, None]
    gram = np.linalg.det(Vn @ Vn.T)
    if not gram > GRAM_TOL:
        raise RankDeficiencyError(f"frame vectors are linearly dependent (Gram determinant {gram:.3g})")
    Q, R = np.linalg.qr(V.T)
    s = np.sign(np.diag(R))
    return (Q * s).T


def sl_residual(frame, tol=SL_TOL):
    """Special Lagrangian residuals of an oriented tangent plane.

    Parameters
    ----------
    frame : TangentFrame
    tol : float
        Threshold used by ``SLResidual.is_sl``.

    Returns
    -------
    SLResidual
        omega_norm = max |omega'(e_i, e_j)| over the orthonormalized frame,
        im_omega_val = Im Omega'(e_1..e_m) and calib_ratio = Re Omega'(e_1..e_m),
        both multiplied by the frame orientation.
    """
    E = orthonormalize(frame.vectors)
    Z = to_complex(E)
    herm = np.conj(Z) @ Z.T
    w = np.abs(herm.imag).max()
    det = np.linalg.det(Z.T) * frame.orientation
    return SLResidual(float(w), float(det.imag), float(det.real), tol)


def sl_residuals(vectors, orientation=1):
    """Vectorized ``sl_residual`` over a batch of frames.

    Parameters
    ----------
    vectors : ndarray, shape (n, m, 2m)
    orientation : int or ndarray of shape (n,)

    Returns
    -------
    ndarray, shape (n, 3)
        Columns omega_norm, im_omega_val, calib_ratio.
    """
    V = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(V, axis=-1)
    if np.any(norms == 0):
        raise RankDeficiencyError("frame contains a zero vector")
    Vn = V / norms[..., None]
    gram = np.linalg.det(Vn @ np.swapaxes(Vn, -1, -2))
    if not np.all(gram > GRAM_TOL):
        raise RankDeficiencyError("frame vectors are linearly dependent")
    Q, R = np.linalg.qr(np.swapaxes(V, -1, -2))
    s = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    E = np.swapaxes(Q * s[..., None, :], -1, -2)
    Z = to_complex(E)
    w = np.abs((np.conj(Z) @ np.swapaxes(Z, -1, -2)).imag).max(axis=(-2, -1))
    det = np.linalg.det(np.swapaxes(Z, -1, -2)) * np.asarray(orientation)
    return np.column_stack([w, det.imag, det.real])


def _check_hess(hess):
    H = np.asarray(hess, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"Hessian must be square, got shape {H.shape}")
    if H.shape[0] < 2:
        raise DimensionError("Hessian dimension must be >= 2")
    if not np.array_equal(H, H.T):
        raise ValueError("Hessian must be exactly symmetric")
    return H


def graph_residual(hess):
    """Im det_C(I + i Hess); zero exactly where the gradient graph is special Lagrangian."""
    H = _check_hess(hess)
    return float(np.linalg.det(np.eye(len(H)) + 1j * H).imag)


def graph_linearization(hess):
    """First-order term of ``graph_residual``: the trace of the Hessian."""
    H = _check_hess(hess)
    return float(np.trace(H))


def j_holomorphic_residual(frame):
    """|dw_1 ^ dw_2| on the orthonormalized frame, with w_1 = x_0 + i x_2, w_2 = x_1 - i x_3.

    Only defined for m = 2, where dw_1 ^ dw_2 = omega' - i Im Omega', so the
    residual vanishes exactly on special Lagrangian planes.
    """
    if frame.m != 2:
        raise DimensionError("j_holomorphic_residual is only defined for m = 2")
    E = orthonormalize(frame.vectors)
    w1 = E[:, 0] + 1j * E[:, 2]
    w2 = E[:, 1] - 1j * E[:, 3]
    return float(abs(w1[0] * w2[1] - w1[1] * w2[0]))


def sl_plane_family_dim(m):
    """Dimension (m^2 + m - 2)/2 of the family of SL m-planes in C^m."""
    if int(m) != m or m < 2:
        raise DimensionError(f"m={m} must be an integer >= 2")
    m = int(m)
    return (m * m + m - 2) // 2


def conformal_factor(omega_top, omega_omega_bar, m):
    """Factor f with f^(2m) * omega_top = omega_omega_bar.

    Rescaling the metric by f^2 makes Re Omega a calibration; f = 1 exactly
    when the Calabi-Yau normalization holds at the point.
    """
    if int(m) != m or m < 2:
        raise DimensionError(f"m={m} must be an integer >= 2")
    if not (omega_top > 0 and omega_omega_bar > 0):
        raise InvalidVolumeError("volume values must be positive")
    return float((omega_omega_bar / omega_top) ** (1.0 / (2 * m)))


def real_plane_frame(m, base=None):
    """Frame spanning the real plane R^m, which is calibrated by Re Omega'."""
    vecs = np.zeros((m, 2 * m))
    vecs[np.arange(m), 2 * np.arange(m)] = 1.0
    base = np.zeros(2 * m) if base is None else base
    return TangentFrame(base, vecs, 1)


def random_su(m, rng=None):
    """Random special unitary matrix: QR of a complex Gaussian, phases fixed, det rotated to 1."""
    rng = np.random.default_rng(rng)
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    Q = Q * (d / np.abs(d))
    return Q / np.linalg.det(Q) ** (1.0 / m)


def apply_unitary(U, vectors):
    """Apply a complex m x m matrix to interleaved real vectors (rows)."""
    return to_real(to_complex(vectors) @ np.asarray(U).T)

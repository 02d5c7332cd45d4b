"""Pure numpy implementations of the hot kernels (fallback when the extension is absent)."""
import numpy as np
from scipy.spatial.distance import cdist


def nearest_distances(points, targets, nthreads=1):
    """Brute-force nearest neighbour from each point to a target set.

    Returns
    -------
    dist : ndarray, shape (n,)
    idx : ndarray of int64, shape (n,)
    """
    points = np.ascontiguousarray(points, dtype=float)
    targets = np.ascontiguousarray(targets, dtype=float)
    n = len(points)
    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    # chunk so the distance block stays around 32 MB
    step = max(1, int(4_000_000 // max(len(targets), 1)))
    for s in range(0, n, step):
        d = cdist(points[s:s + step], targets)
        k = np.argmin(d, axis=1)
        idx[s:s + step] = k
        dist[s:s + step] = d[np.arange(len(k)), k]
    return dist, idx


def quasilinear_stencil(F, nbr, arm, y, a):
    """Residual and Jacobian rows of the discrete operator
    P(f) = (f_x^2 + y^2 + a^2)^(-1/2) f_xx + 2 f_yy on a cut-cell 5-point stencil.

    Parameters
    ----------
    F : ndarray, shape (N + nb,)
        Interior values followed by boundary-crossing values.
    nbr : ndarray of int64, shape (N, 4)
        Neighbour indices into F in the order W, E, S, N.
    arm : ndarray, shape (N, 4)
        Distance to each neighbour.
    y : ndarray, shape (N,)
    a : float

    Returns
    -------
    r : ndarray, shape (N,)
    J : ndarray, shape (N, 5)
        Partial derivatives of r with respect to [self, W, E, S, N].
    """
    N = nbr.shape[0]
    f = F[:N]
    fw, fe, fs, fn = (F[nbr[:, d]] for d in range(4))
    hw, he, hs, hn = (arm[:, d] for d in range(4))
    sx = hw + he
    sy = hs + hn
    fxx = 2.0 / sx * ((fe - f) / he - (f - fw) / hw)
    fyy = 2.0 / sy * ((fn - f) / hn - (f - fs) / hs)
    den = hw * he * sx
    fx = (hw * hw * fe - he * he * fw + (he * he - hw * hw) * f) / den
    q = fx * fx + y * y + a * a
    c = q ** -0.5
    r = c * fxx + 2.0 * fyy
    dc = -fx * c / q * fxx
    J = np.empty((N, 5))
    J[:, 0] = -2.0 * c / sx * (1 / he + 1 / hw) - 4.0 / sy * (1 / hn + 1 / hs) + dc * (he * he - hw * hw) / den
    J[:, 1] = 2.0 * c / (sx * hw) - dc * he * he / den
    J[:, 2] = 2.0 * c / (sx * he) + dc * hw * hw / den
    J[:, 3] = 4.0 / (sy * hs)
    J[:, 4] = 4.0 / (sy * hn)
    return r, J

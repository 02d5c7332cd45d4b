# cython: language_level=3
"""Compiled versions of the hot kernels; same signatures as _pykernels."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt

cnp.import_array()


def nearest_distances(points, targets, int nthreads=1):
    """Exact nearest target for each point.

    Targets are sorted along the coordinate of largest spread; each query scans
    outward from its position in that order and stops once the gap along the
    sort axis alone exceeds the best distance found.
    """
    P_arr = np.ascontiguousarray(points, dtype=np.float64)
    T_arr = np.ascontiguousarray(targets, dtype=np.float64)
    if P_arr.ndim != 2 or T_arr.ndim != 2 or T_arr.shape[1] != P_arr.shape[1]:
        raise ValueError("points and targets must be 2-D with equal dimension")
    if len(T_arr) == 0:
        raise ValueError("empty target set")
    ax = int(np.argmax(T_arr.std(axis=0)))
    order = np.argsort(T_arr[:, ax], kind="stable")
    cdef double[:, ::1] T = np.ascontiguousarray(T_arr[order])
    cdef double[:, ::1] P = P_arr
    cdef long long[::1] perm = order.astype(np.int64)
    cdef double[::1] key = np.ascontiguousarray(T_arr[order, ax])
    cdef Py_ssize_t n = P.shape[0], k = T.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, l, lo, hi, mid, jl, jr
    cdef int a = ax
    dist_arr = np.empty(n)
    idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] idx = idx_arr
    cdef double best, s, t, x, g
    cdef long long bj
    cdef bint go_l, go_r
    if nthreads < 1:
        nthreads = 1
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="dynamic"):
        x = P[i, a]
        lo = 0
        hi = k
        while lo < hi:
            mid = (lo + hi) // 2
            if key[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        best = 1e308
        bj = 0
        jr = lo
        jl = lo - 1
        while True:
            go_l = False
            go_r = False
            if jl >= 0:
                g = x - key[jl]
                go_l = g * g < best
            if jr < k:
                g = key[jr] - x
                go_r = g * g < best
            if not go_l and not go_r:
                break
            if go_r:
                s = 0.0
                for l in range(d):
                    t = P[i, l] - T[jr, l]
                    s = s + t * t
                if s < best:
                    best = s
                    bj = jr
                jr = jr + 1
            else:
                jr = k  # gaps only grow further right
            if go_l:
                s = 0.0
                for l in range(d):
                    t = P[i, l] - T[jl, l]
                    s = s + t * t
                if s < best:
                    best = s
                    bj = jl
                jl = jl - 1
            else:
                jl = -1
        dist[i] = sqrt(best)
        idx[i] = perm[bj]
    return dist_arr, idx_arr


def quasilinear_stencil(F, nbr, arm, y, double a):
    cdef double[::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef long long[:, ::1] nb = np.ascontiguousarray(nbr, dtype=np.int64)
    cdef double[:, ::1] ar = np.ascontiguousarray(arm, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t N = nb.shape[0], i
    r_arr = np.empty(N)
    J_arr = np.empty((N, 5))
    cdef double[::1] r = r_arr
    cdef double[:, ::1] J = J_arr
    cdef double f, fw, fe, fs, fn, hw, he, hs, hn, sx, sy, fxx, fyy, den, fx, q, c, dc
    for i in range(N):
        f = Fv[i]
        fw = Fv[nb[i, 0]]
        fe = Fv[nb[i, 1]]
        fs = Fv[nb[i, 2]]
        fn = Fv[nb[i, 3]]
        hw = ar[i, 0]
        he = ar[i, 1]
        hs = ar[i, 2]
        hn = ar[i, 3]
        sx = hw + he
        sy = hs + hn
        fxx = 2.0 / sx * ((fe - f) / he - (f - fw) / hw)
        fyy = 2.0 / sy * ((fn - f) / hn - (f - fs) / hs)
        den = hw * he * sx
        fx = (hw * hw * fe - he * he * fw + (he * he - hw * hw) * f) / den
        q = fx * fx + yv[i] * yv[i] + a * a
        c = 1.0 / sqrt(q)
        r[i] = c * fxx + 2.0 * fyy
        dc = -fx * c / q * fxx
        J[i, 0] = -2.0 * c / sx * (1 / he + 1 / hw) - 4.0 / sy * (1 / hn + 1 / hs) + dc * (he * he - hw * hw) / den
        J[i, 1] = 2.0 * c / (sx * hw) - dc * he * he / den
        J[i, 2] = 2.0 * c / (sx * he) + dc * hw * hw / den
        J[i, 3] = 4.0 / (sy * hs)
        J[i, 4] = 4.0 / (sy * hn)
    return r_arr, J_arr

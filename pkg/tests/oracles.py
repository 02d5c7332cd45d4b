"""Independent reference computations used by the tests.

Nothing here calls into slgeo; each oracle rebuilds the quantity from a
different formulation (symbolic expansion, explicit permutation sums, lattice
enumeration by brute force).
"""
import itertools
from functools import lru_cache

import numpy as np
import sympy


@lru_cache(maxsize=None)
def _graph_poly(m):
    H = sympy.Matrix(m, m, lambda i, j: sympy.Symbol(f"h{min(i, j)}{max(i, j)}", real=True))
    expr = sympy.expand((sympy.eye(m) + sympy.I * H).det())
    im = sympy.im(expr)
    syms = sorted(H.free_symbols, key=lambda s: s.name)
    return sympy.lambdify(syms, im, "math"), syms


def graph_residual_symbolic(H):
    """Im det(I + i H) from the fully expanded symbolic polynomial."""
    m = len(H)
    fn, syms = _graph_poly(m)
    vals = {f"h{i}{j}": float(H[i][j]) for i in range(m) for j in range(i, m)}
    return float(fn(*[vals[s.name] for s in syms]))


def _perm_sign(p):
    s, p = 1, list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def holomorphic_volume(vectors):
    """Omega'(v_1..v_m) by the Leibniz sum of products of dz_j = dx_j + i dy_j."""
    V = np.asarray(vectors, dtype=float)
    m = V.shape[0]
    dz = V[:, 0::2] + 1j * V[:, 1::2]
    total = 0j
    for p in itertools.permutations(range(m)):
        term = _perm_sign(p)
        for k in range(m):
            term *= dz[k, p[k]]
        total += term
    return total


def kahler(u, v):
    """omega'(u, v) = sum_j (x_j(u) y_j(v) - y_j(u) x_j(v))."""
    u, v = np.asarray(u), np.asarray(v)
    return float(np.sum(u[0::2] * v[1::2] - u[1::2] * v[0::2]))


def re_omega_dual(X_real):
    """Vector w with <w, e> = Re Omega'(X_1, ..., X_{m-1}, e) for every real basis vector e."""
    X = np.asarray(X_real, dtype=float)
    n = X.shape[1]
    w = np.empty(n)
    for b in range(n):
        e = np.zeros(n)
        e[b] = 1.0
        w[b] = holomorphic_volume(np.vstack([X, e])).real
    return w


def torus_eigenvalues_bruteforce(lattice, kmax):
    """4 pi^2 |mu|^2 over dual lattice vectors with integer coordinates |k_i| <= kmax, sorted."""
    dual = np.linalg.inv(np.asarray(lattice, dtype=float)).T
    ks = range(-kmax, kmax + 1)
    lam = [4 * np.pi ** 2 * float(np.sum((np.array([i, j]) @ dual) ** 2)) for i in ks for j in ks]
    return np.sort(lam)


def sphere_multiplicity(d, k):
    """Dimension of degree-k harmonic polynomials in d+1 variables, by counting monomials."""
    def monomials(n, deg):
        return len([c for c in itertools.combinations_with_replacement(range(n), deg)]) if deg >= 0 else 0
    return monomials(d + 1, k) - monomials(d + 1, k - 2)

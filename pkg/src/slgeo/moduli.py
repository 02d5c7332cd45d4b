"""Dimension counts for moduli of SL m-folds: compact, asymptotically conical and conical.

All functions take topological data (Betti numbers) and cone indices and return integers.
"""
from dataclasses import dataclass

from .errors import DomainError, InconsistencyError, OutOfRangeError


@dataclass(frozen=True)
class BettiData:
    """Betti numbers of an SL m-fold.

    b1_cs is the first compactly supported Betti number (for noncompact L),
    b_m_minus_1 the Betti number in degree m - 1. For closed L Poincare duality
    forces b1 = b_{m-1}.
    """

    b1: int
    b0: int = 1
    b1_cs: int = 0
    b_m_minus_1: int = None
    closed: bool = False

    def __post_init__(self):
        for name in ("b1", "b0", "b1_cs"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"{name} must be a nonnegative integer, got {v}")
        if self.b_m_minus_1 is not None and (int(self.b_m_minus_1) != self.b_m_minus_1 or self.b_m_minus_1 < 0):
            raise DomainError("b_{m-1} must be a nonnegative integer")
        if self.closed and self.b_m_minus_1 is not None and self.b_m_minus_1 != self.b1:
            raise InconsistencyError(f"closed manifold needs b1 = b_(m-1), got {self.b1} and {self.b_m_minus_1}")


def mclean_dim(betti):
    """Dimension b1 of the smooth moduli space of a compact SL m-fold."""
    if isinstance(betti, BettiData):
        return int(betti.b1)
    if int(betti) != betti or betti < 0:
        raise DomainError("b1 must be a nonnegative integer")
    return int(betti)


def ac_moduli_dim(betti, m, lam, N_lambda=0):
    """Dimension of the moduli space of an AC SL m-fold with rate lambda.

    Parameters
    ----------
    betti : BettiData
    m : int
    lam : float
        Decay rate; the caller checks lam is not an exponent of the cone.
    N_lambda : int
        Counting function N(lambda) of the cone link (used when 0 < lam < 2).

    Returns
    -------
    int
        b1 - b0 + N(lambda) for 0 < lam < 2, and b1_cs for 2 - m < lam < 0.
    """
    if m < 3:
        raise DomainError("AC moduli counts need m >= 3")
    if lam >= 2:
        raise OutOfRangeError(f"rate lambda = {lam} >= 2 has no dimension formula")
    if 0 < lam < 2:
        d = betti.b1 - betti.b0 + N_lambda
        if d < 0:
            raise InconsistencyError(f"negative dimension {d} from b1 - b0 + N(lambda)")
        return int(d)
    if 2 - m < lam < 0:
        return int(betti.b1_cs)
    raise OutOfRangeError(f"rate lambda = {lam} is outside (2 - m, 0) u (0, 2) for m = {m}")


def singularity_index(b0_X, b1_cs_list, sind_list):
    """Index of an SL m-fold X with conical singularities desingularized by AC pieces L_i.

    ind = 1 - b0(X') + sum_i b1_cs(L_i) + sum_i s-ind(C_i), where X' is the
    nonsingular part; ind is the expected codimension of X in the family.
    """
    b1 = [int(v) for v in b1_cs_list]
    s = [int(v) for v in sind_list]
    if len(b1) != len(s):
        raise DomainError("b1_cs_list and sind_list must have equal length")
    if not s:
        raise DomainError("need at least one singular point")
    if any(v < 0 for v in s):
        raise InconsistencyError("stability indices of cones are nonnegative")
    if any(v < 0 for v in b1) or b0_X < 1:
        raise DomainError("Betti numbers must be nonnegative and b0(X') >= 1")
    return int(1 - b0_X + sum(b1) + sum(s))


PAIRING_TOL = 1e-10


@dataclass(frozen=True)
class ObstructionResult:
    """Outcome of the topological test; ``bool(result)`` is True when nothing obstructs."""

    ok: bool
    omega_violations: tuple = ()
    im_omega_violations: tuple = ()

    def __bool__(self):
        return self.ok


def obstruction_check(omega_pairings, im_omega_pairings, tol=PAIRING_TOL):
    """Necessary condition for an SL representative: [omega|N] = 0 and [Im Omega|N] = 0.

    Parameters
    ----------
    omega_pairings : sequence of float
        Pairings of [omega] with a basis of H_2(N); may be empty.
    im_omega_pairings : sequence of float
        Pairings of [Im Omega] with H_m(N).
    """
    w = tuple(i for i, v in enumerate(omega_pairings) if not abs(v) <= tol)
    im = tuple(i for i, v in enumerate(im_omega_pairings) if not abs(v) <= tol)
    return ObstructionResult(not w and not im, w, im)

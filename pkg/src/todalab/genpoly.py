"""Generalized polynomials  p(z) = sum_j c_j z^{s_j}  with real exponents.

Exponents are kept as exact :class:`~fractions.Fraction` values so that
merging of equal powers is an exact comparison.  Coefficients may be
Python complex numbers or :mod:`mpmath` numbers; evaluation has a
vectorised double-precision path (:meth:`GenPoly.eval`) and a scalar
arbitrary-precision path (:meth:`GenPoly.eval_mp`).

Powers use the logarithm with argument in ``(cut - 2 pi, cut]``; the
default ``cut = pi`` is the principal branch with the cut along the
negative real axis.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

from .cartan import CartanData, as_fraction
from .errors import BranchCutError, DomainError

__all__ = ["GenPoly", "branch_log", "build_q", "CUT_TOL"]

CUT_TOL = 1e-13
TWO_PI = 2.0 * math.pi


def _is_zero(c) -> bool:
    return c == 0


def branch_log(z, cut_angle: float = math.pi, check: bool = False):
    """Logarithm of ``z`` with argument in ``(cut_angle - 2 pi, cut_angle]``.

    With ``check=True`` a :class:`BranchCutError` is raised for points on
    the cut.  Works on scalars and arrays.
    """
    z = np.asarray(z, dtype=complex)
    a = np.angle(z)
    d = np.mod(cut_angle - a, TWO_PI)
    if check:
        on_cut = (np.minimum(d, TWO_PI - d) <= CUT_TOL) & (z != 0)
        if np.any(on_cut):
            raise BranchCutError(f"point on the branch cut at angle {cut_angle:.6g}")
    arg = cut_angle - d
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z)) + 1j * arg


def _mp_branch_log(z, cut_angle, check):
    z = mpmath.mpc(z)
    cut = mpmath.mpf(cut_angle)
    d = mpmath.fmod(cut - mpmath.arg(z), 2 * mpmath.pi)
    if d < 0:
        d += 2 * mpmath.pi
    if check and min(d, 2 * mpmath.pi - d) <= CUT_TOL:
        raise BranchCutError(f"point on the branch cut at angle {cut_angle:.6g}")
    return mpmath.log(abs(z)) + 1j * (cut - d)


class GenPoly:
    """Finite sum of terms ``c * z**s``; immutable.

    Parameters
    ----------
    terms : iterable of (coefficient, exponent)
        Equal exponents are merged and zero coefficients dropped.
    """

    __slots__ = ("terms", "_exps", "_coefs")

    def __init__(self, terms=()):
        acc: dict[Fraction, object] = {}
        for c, s in terms:
            s = as_fraction(s)
            acc[s] = acc[s] + c if s in acc else c
        self.terms = tuple((c, s) for s, c in sorted(acc.items()) if not _is_zero(c))
        self._exps = None
        self._coefs = None

    @classmethod
    def monomial(cls, s, c=1.0 + 0j) -> "GenPoly":
        return cls([(c, s)])

    # ---- structure -------------------------------------------------------
    @property
    def exponents(self) -> tuple[Fraction, ...]:
        return tuple(s for _, s in self.terms)

    @property
    def coefficients(self) -> tuple:
        return tuple(c for c, _ in self.terms)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, GenPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        body = " + ".join(f"({complex(c):.6g})*z^{s}" for c, s in self.terms) or "0"
        return f"GenPoly({body})"

    def __add__(self, other):
        if not isinstance(other, GenPoly):
            return NotImplemented
        return GenPoly(self.terms + other.terms)

    def __neg__(self):
        return GenPoly((-c, s) for c, s in self.terms)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GenPoly):
            return GenPoly((c1 * c2, s1 + s2) for c1, s1 in self.terms for c2, s2 in other.terms)
        return GenPoly((c * other, s) for c, s in self.terms)

    __rmul__ = __mul__

    @property
    def has_fractional_exponent(self) -> bool:
        return any(s.denominator != 1 for _, s in self.terms)

    def derivative(self, order: int = 1) -> "GenPoly":
        """Exact ``order``-th z-derivative (power rule, term by term)."""
        if order < 0:
            raise ValueError("order must be non-negative")
        terms = self.terms
        for _ in range(order):
            terms = tuple((c * s, s - 1) for c, s in terms if s != 0)
        return GenPoly(terms)

    # ---- evaluation ------------------------------------------------------
    def _arrays(self):
        if self._exps is None:
            self._exps = np.array([float(s) for _, s in self.terms], dtype=float)
            self._coefs = np.array([complex(c) for c, _ in self.terms], dtype=complex)
        return self._exps, self._coefs

    def _check_zero(self, z):
        if np.any(z == 0) and any(s < 0 for _, s in self.terms):
            raise DomainError("evaluation at z = 0 with a negative exponent")

    def eval(self, z, cut_angle: float = math.pi, log_scale=None):
        """Evaluate at ``z`` (scalar or array) in double precision.

        ``log_scale`` (real, broadcastable to ``z``) is subtracted from the
        exponent of every term, i.e. the result is ``p(z) * exp(-log_scale)``;
        use it to keep large or tiny values in range.
        """
        z = np.asarray(z, dtype=complex)
        self._check_zero(z)
        exps, coefs = self._arrays()
        if not len(exps):
            return np.zeros(z.shape, dtype=complex)[()]
        L = branch_log(z, cut_angle, check=self.has_fractional_exponent)
        with np.errstate(invalid="ignore"):  # log 0 * 0 at z = 0, replaced below
            expo = L[..., None] * exps
        if log_scale is not None:
            expo = expo - np.asarray(log_scale, dtype=float)[..., None]
        zero = z == 0
        if np.any(zero):
            # only non-negative exponents reach here; 0^0 = 1, 0^s = 0
            expo = np.where(zero[..., None], np.where(exps == 0, 0.0, -np.inf), expo)
        return (np.exp(expo) @ coefs)[()]

    def __call__(self, z, cut_angle: float = math.pi):
        return self.eval(z, cut_angle)

    def eval_mp(self, z, cut_angle: float = math.pi):
        """Scalar evaluation at the current :mod:`mpmath` working precision."""
        z = mpmath.mpc(z)
        if z == 0:
            self._check_zero(np.array(0j))
            return sum((mpmath.mpc(c) for c, s in self.terms if s == 0), mpmath.mpc(0))
        L = _mp_branch_log(z, cut_angle, self.has_fractional_exponent)
        total = mpmath.mpc(0)
        for c, s in self.terms:
            total += mpmath.mpc(c) * mpmath.exp(L * mpmath.mpf(s.numerator) / s.denominator)
        return total


def build_q(cd: CartanData, c, i: int) -> GenPoly:
    """The generalized polynomial q_i = sum_{j<=i} c_ij z^{e_j} with c_ii = 1.

    ``c`` is a square (n+1)x(n+1) array-like of coefficients whose strictly
    lower triangle holds c_ij; the diagonal and upper triangle are ignored.
    """
    if not 0 <= i <= cd.n:
        raise IndexError(f"q index {i} outside 0..{cd.n}")
    e = cd.exponents()
    terms = [(1.0 + 0j, e[i])]
    terms += [(c[i][j], e[j]) for j in range(i)]
    return GenPoly(terms)

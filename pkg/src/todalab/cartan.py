"""Cartan matrix of SU(n+1) and the exponent bookkeeping derived from it.

All derived quantities are stored as exact :class:`fractions.Fraction`
values. Floats passed as singularity strengths are converted with
``Fraction(x)``, i.e. their exact binary value, so strict orderings and
integrality tests are never blurred by rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real

import numpy as np

from .errors import ValidationError

__all__ = [
    "CartanData",
    "as_fraction",
    "build_cartan",
    "cartan_matrix",
    "cartan_inverse",
    "decay_exponent",
    "regular_decay_exponent",
]


def as_fraction(x) -> Fraction:
    """Exact rational view of an int, Fraction, float or ``"p/q"`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ValidationError(f"expected a real number, got {x!r}")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {x!r} as a rational number") from exc
    if isinstance(x, Real):
        xf = float(x)
        if not np.isfinite(xf):
            raise ValidationError(f"non-finite value {x!r}")
        return Fraction(xf)
    raise ValidationError(f"expected a real number, got {type(x).__name__}")


def cartan_matrix(n: int) -> np.ndarray:
    a = 2 * np.eye(n, dtype=int)
    idx = np.arange(n - 1)
    a[idx, idx + 1] = -1
    a[idx + 1, idx] = -1
    return a


def cartan_inverse(n: int) -> tuple[tuple[Fraction, ...], ...]:
    # closed form: a^{ij} = min(i,j) * (n+1-max(i,j)) / (n+1), 1-based
    return tuple(
        tuple(Fraction(min(i, j) * (n + 1 - max(i, j)), n + 1) for j in range(1, n + 1))
        for i in range(1, n + 1)
    )


@dataclass(frozen=True)
class CartanData:
    """Exponent bookkeeping for rank ``n`` and singularity vector ``gamma``.

    Index conventions follow the mathematics: ``gamma[i-1]`` is gamma_i,
    ``s[i-1]`` is s_i.  ``I1``/``I2`` hold 1-based indices.
    """

    n: int
    gamma: tuple[Fraction, ...]
    Ainv_exact: tuple[tuple[Fraction, ...], ...]
    mu: tuple[Fraction, ...]
    gamma_up: tuple[Fraction, ...]
    s: tuple[Fraction, ...]
    I1: frozenset
    I2: frozenset

    @property
    def A(self) -> np.ndarray:
        return cartan_matrix(self.n)

    @property
    def Ainv(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.Ainv_exact])

    @property
    def gamma_f(self) -> np.ndarray:
        return np.array([float(g) for g in self.gamma])

    @property
    def s0(self) -> Fraction:
        """Exponent of q_0, i.e. the empty-sum extension s_0 = -gamma^1."""
        return -self.gamma_up[0]

    def exponents(self) -> tuple[Fraction, ...]:
        """Exponents (e_0, ..., e_n) of the monomials z^{e_j} spanning q_0..q_n."""
        return (self.s0,) + self.s

    def s_ext(self, i: int) -> Fraction:
        """s_i for 0 <= i <= n, with s_0 = -gamma^1."""
        if not 0 <= i <= self.n:
            raise IndexError(f"s index {i} outside 0..{self.n}")
        return self.exponents()[i]

    def S(self, m: int) -> Fraction:
        """Growth exponent: e^{-U^m} ~ |z|^{2 S_m} at infinity."""
        self._check_m(m)
        return sum(self.s[self.n - m:], Fraction(0)) - Fraction(m * (m - 1), 2)

    def _check_m(self, m: int) -> None:
        if not 1 <= m <= self.n:
            raise IndexError(f"index {m} outside 1..{self.n}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": [float(g) for g in self.gamma],
            "mu": [float(v) for v in self.mu],
            "gammaUp": [float(v) for v in self.gamma_up],
            "s": [float(v) for v in self.s],
            "S": [float(self.S(m)) for m in range(1, self.n + 1)],
            "I1": sorted(self.I1),
            "I2": sorted(self.I2),
        }


def build_cartan(n: int, gamma) -> CartanData:
    """Assemble :class:`CartanData` for rank ``n`` and strengths ``gamma``.

    Raises
    ------
    ValidationError
        ``n < 1``, wrong length of ``gamma`` or a negative entry.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"rank n must be a positive integer, got {n!r}", field="n")
    n = int(n)
    gamma = list(gamma)
    if len(gamma) != n:
        raise ValidationError(f"gamma must have {n} entries, got {len(gamma)}", field="gamma")
    g = []
    for i, x in enumerate(gamma, start=1):
        try:
            gi = as_fraction(x)
        except ValidationError as exc:
            raise ValidationError(str(exc), field=f"gamma[{i}]") from exc
        if gi < 0:
            raise ValidationError(f"gamma_{i} = {x!r} is negative", field=f"gamma[{i}]")
        g.append(gi)

    ainv = cartan_inverse(n)
    mu = tuple(1 + gi for gi in g)
    gamma_up = tuple(sum((ainv[i][j] * g[j] for j in range(n)), Fraction(0)) for i in range(n))
    s = []
    acc = Fraction(0)
    for i in range(n):
        acc += mu[i]
        s.append(acc - gamma_up[0])
    s = tuple(s)
    assert all(b > a for a, b in zip(s, s[1:])), "s must be strictly increasing"
    return CartanData(
        n=n,
        gamma=tuple(g),
        Ainv_exact=ainv,
        mu=mu,
        gamma_up=gamma_up,
        s=s,
        I1=frozenset(i for i in range(1, n + 1) if g[i - 1] != 0),
        I2=frozenset(i for i in range(1, n + 1) if g[i - 1] == 0),
    )


def decay_exponent(cd: CartanData, i: int) -> float:
    """Slope of U_i against log|y| at infinity: -4 - 2 gamma_{n+1-i}."""
    cd._check_m(i)
    return float(-4 - 2 * cd.gamma[cd.n - i])


def regular_decay_exponent(cd: CartanData, i: int) -> float:
    """Same slope for the regular part: -4 - 2 gamma_{n+1-i} - 2 gamma_i."""
    cd._check_m(i)
    return float(-4 - 2 * cd.gamma[cd.n - i] - 2 * cd.gamma[i - 1])

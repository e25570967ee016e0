"""Two-term expansion of e^{-U^m} at infinity and its numerical check.

For large |z|,

    det_m(f) = L_m |z|^{2 S_m} (1 + (2 D1/D)(alpha cos t + beta sin t)/r + O(r^-2))

where L_m = lambda_{n+1-m} ... lambda_n D^2 and (alpha, beta) are the real
and imaginary parts of c_{n+1-m, n-m}.  The 1/r term is present only when
gamma_{n+1-m} = 0; otherwise the correction is O(r^-2).  Since
e^{-U^m} = 2^{m(m-1)} det_m(f), its leading coefficient is
``prefactor * leading`` with ``prefactor = 2^{m(m-1)}``.

D and D1 are determinants of falling-factorial matrices
[ (x_col)(x_col - 1)...(x_col - p + 1) ]_{p, col}, which reduce to
Vandermonde products of the column exponents x.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import mpmath
import numpy as np

from .cartan import CartanData
from .errors import ConfigError
from .solution import EXTENDED_DPS, TodaSolution

__all__ = [
    "ExpansionReport",
    "falling_factorial_matrix",
    "fit_expansion",
    "predict_expansion",
    "product_D",
    "product_D1",
    "product_D_printed",
    "ring_angles",
    "vandermonde_product",
]


def vandermonde_product(xs) -> float:
    """prod_{a<b} (x_b - x_a), the determinant of the falling-factorial matrix."""
    out = 1
    for a, b in itertools.combinations(range(len(xs)), 2):
        out *= xs[b] - xs[a]
    return out


def falling_factorial_matrix(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    k = len(xs)
    M = np.ones((k, k))
    for p in range(1, k):
        M[p] = M[p - 1] * (xs - (p - 1))
    return M


def _D_columns(cd: CartanData, m: int):
    return [cd.s[i - 1] for i in range(cd.n + 1 - m, cd.n + 1)]


def _D1_columns(cd: CartanData, m: int):
    return [cd.s_ext(cd.n - m)] + [cd.s[i - 1] for i in range(cd.n + 2 - m, cd.n + 1)]


def product_D(cd: CartanData, m: int) -> float:
    """Leading constant D for block m: prod_{n+1-m <= i < j <= n} (s_j - s_i).

    This is the signed determinant of the falling-factorial matrix with
    columns s_{n+1-m}, ..., s_n.
    """
    cd._check_m(m)
    return float(vandermonde_product(_D_columns(cd, m)))


def product_D_printed(cd: CartanData, m: int) -> float:
    """prod_{i<j} (s_i - s_j); differs from :func:`product_D` by (-1)^{m(m-1)/2}."""
    cd._check_m(m)
    return (-1) ** (m * (m - 1) // 2) * product_D(cd, m)


def product_D1(cd: CartanData, m: int) -> float:
    """First-order constant D1 for block m.

    D1 = prod_{i >= n+2-m} (s_i - s_{n-m}) * prod_{n+2-m <= i < j <= n} (s_j - s_i),
    the determinant with column s_{n+1-m} replaced by s_{n-m}.  For m = n
    the missing s_0 is the exponent of q_0, namely -gamma^1.
    """
    cd._check_m(m)
    return float(vandermonde_product(_D1_columns(cd, m)))


@dataclass
class ExpansionReport:
    m: int
    S_m: float
    D: float
    D1: float
    leading: float
    prefactor: float
    first_order_present: bool
    alpha: float
    beta: float
    first_coefficient: float
    fitted_S: float | None = None
    fitted_leading: float | None = None
    fitted_first: tuple | None = None
    fit_residual: float | None = None
    radii: tuple | None = None

    @property
    def predicted_first(self) -> tuple:
        if not self.first_order_present:
            return (0.0, 0.0)
        return (self.first_coefficient * self.alpha, self.first_coefficient * self.beta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["predicted_first"] = list(self.predicted_first)
        if d["fitted_first"] is not None:
            d["fitted_first"] = list(d["fitted_first"])
        if d["radii"] is not None:
            d["radii"] = list(d["radii"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def predict_expansion(sol: TodaSolution, m: int) -> ExpansionReport:
    cd = sol.cd
    cd._check_m(m)
    n = cd.n
    k = n + 1 - m
    D = product_D(cd, m)
    D1 = product_D1(cd, m)
    leading = math.prod(sol.params.lam[k:]) * D * D
    present = k in cd.I2
    c = sol.params.c[k][k - 1]
    return ExpansionReport(
        m=m,
        S_m=float(cd.S(m)),
        D=D,
        D1=D1,
        leading=leading,
        prefactor=float(2 ** (m * (m - 1))),
        first_order_present=present,
        alpha=c.real if present else 0.0,
        beta=c.imag if present else 0.0,
        first_coefficient=2.0 * D1 / D,
    )


def ring_angles(count: int, cut_angle: float = math.pi) -> np.ndarray:
    """``count`` equispaced angles, offset by half a step from the branch cut."""
    return cut_angle + 2.0 * np.pi * (np.arange(count) + 0.5) / count


def _log_minus_growth(sol, m, z, S, precision):
    """log det_m(f)(z) - 2 S log|z| as floats."""
    if precision == "extended":
        with mpmath.workdps(EXTENDED_DPS):
            v = sol.log_tau(m, z, "extended")
            two_s = 2 * mpmath.mpf(S.numerator) / S.denominator
            out = np.empty(z.shape)
            for idx, zz in np.ndenumerate(z):
                out[idx] = float(v[idx] - two_s * mpmath.log(abs(mpmath.mpc(zz))))
            return out
    return sol.log_tau(m, z) - 2.0 * float(S) * np.log(np.abs(z))


def fit_expansion(sol: TodaSolution, m: int, radii=None, angles: int = 16,
                  precision: str = "extended") -> ExpansionReport:
    """Fit  log det_m(f) - 2 S_m log r  against {1, cos t / r, sin t / r}.

    The exponent is checked separately: ring means (which carry no 1/r
    term) are regressed on {1, 2 log r, r^-2}, so the slope is free of the
    O(r^-2) correction.  Default grid: 8 log-spaced radii per decade on
    [1e3, 1e4] and 16 angles.
    """
    rep = predict_expansion(sol, m)
    if radii is None:
        radii = np.logspace(3, 4, 9)
    radii = np.asarray(sorted(radii), dtype=float)
    if len(radii) < 2 or radii[-1] / radii[0] < 10.0 * (1 - 1e-12):
        raise ConfigError("radius grid must span at least one decade")
    th = ring_angles(angles, sol.cut_angle)
    R, TH = np.meshgrid(radii, th, indexing="ij")
    z = R * np.exp(1j * TH)
    S = sol.cd.S(m)
    y = _log_minus_growth(sol, m, z, S, precision)

    X = np.stack([np.ones(z.size), (np.cos(TH) / R).ravel(), (np.sin(TH) / R).ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(X, y.ravel(), rcond=None)
    resid = y.ravel() - X @ coef

    means = y.mean(axis=1)
    if len(radii) >= 3:
        Xs = np.stack([np.ones_like(radii), 2.0 * np.log(radii), radii ** -2.0], axis=1)
        slope_extra = np.linalg.lstsq(Xs, means, rcond=None)[0][1]
    else:
        slope_extra = (means[-1] - means[0]) / (2.0 * math.log(radii[-1] / radii[0]))
    rep.fitted_S = float(S) + float(slope_extra)
    rep.fitted_leading = float(math.exp(coef[0]))
    rep.fitted_first = (float(coef[1]), float(coef[2]))
    rep.fit_residual = float(np.sqrt(np.mean(resid ** 2)))
    rep.radii = (float(radii[0]), float(radii[-1]))
    return rep

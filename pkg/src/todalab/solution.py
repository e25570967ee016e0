"""Global solutions of the singular SU(n+1) Toda system.

A solution is fixed by weights lambda_0..lambda_n and a lower-triangular
coefficient array c_ij.  With q_i = sum_{j<=i} c_ij z^{e_j} (c_ii = 1) and

    f = sum_i lambda_i |q_i|^2,    f^{(p,q)} = d_z^p d_zbar^q f,

the potentials are e^{-U^m} = 2^{m(m-1)} det[f^{(p,q)}]_{0<=p,q<m}, and
U_i = sum_m a_im U^m solves  Delta U_i + sum_j a_ij e^{U_j} = 4 pi gamma_i delta_0.

Determinants are evaluated through the Cauchy-Binet expansion

    det_m(f) = sum_{|S|=m} lambda_S |W_S(z)|^2,
    W_S(z)   = sum_{|T|=m} det C[S,T] * V(e_T) * z^{sum e_T - m(m-1)/2},

with V the Vandermonde product of the exponents.  Every summand is
non-negative, so no cancellation occurs however large |z| is; values are
carried in log space.  The textbook route (determinant of the matrix of
mixed derivatives) is kept as ``method="direct"`` for cross-checks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np

from .cartan import CartanData
from .errors import DomainError, InvalidSolutionError, ValidationError
from .genpoly import GenPoly, _mp_branch_log, build_q
from .stencils import laplacian

__all__ = [
    "EXTENDED_DPS",
    "Potentials",
    "SolutionParams",
    "TodaSolution",
    "coefficient_allowed",
    "lambda_product_target",
    "make_params",
    "random_params",
    "validate_params",
]

# ~113-bit mantissa, the width of IEEE binary128
EXTENDED_DPS = 34
_COEF_DPS = 60
REALNESS_TOL = 1e-10
CONDITION_SWITCH = 1e6


def lambda_product_target(cd: CartanData) -> float:
    """Required value of lambda_0 * ... * lambda_n."""
    prod = Fraction(1)
    for i in range(cd.n):
        for j in range(i, cd.n):
            prod *= sum(cd.mu[i:j + 1], Fraction(0)) ** 2
    return float(Fraction(1, 2 ** (cd.n * (cd.n + 1))) / prod)


def coefficient_allowed(cd: CartanData, i: int, j: int) -> bool:
    """Whether c_ij may be non-zero.

    The term c_ij z^{e_j} keeps |q_i|^2 single valued only when
    e_i - e_j = mu_{j+1} + ... + mu_i is an integer, i.e. when
    gamma_{j+1} + ... + gamma_i is; for j = i-1 this is gamma_i in N.
    """
    return sum(cd.gamma[j:i], Fraction(0)).denominator == 1


@dataclass(frozen=True)
class SolutionParams:
    """Weights and coefficients of one global solution.

    ``c`` is a full (n+1)x(n+1) nested tuple; only the strictly lower
    triangle is meaningful.  ``coerced`` lists entries changed by
    :func:`validate_params`.
    """

    lam: tuple[float, ...]
    c: tuple[tuple[complex, ...], ...]
    normalized: bool = False
    coerced: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.lam) - 1

    def alpha(self, i: int) -> float:
        """Real part of the sub-diagonal coefficient c_{i,i-1}."""
        return self.c[i][i - 1].real

    def beta(self, i: int) -> float:
        return self.c[i][i - 1].imag

    def with_lambda(self, k: int, value: float) -> "SolutionParams":
        lam = list(self.lam)
        lam[k] = value
        return replace(self, lam=tuple(lam), normalized=False, coerced=())

    def with_c(self, i: int, j: int, value: complex) -> "SolutionParams":
        c = [list(row) for row in self.c]
        c[i][j] = complex(value)
        return replace(self, c=tuple(tuple(r) for r in c), normalized=False, coerced=())

    def to_dict(self) -> dict:
        n = self.n
        return {
            "lambda": list(self.lam),
            "c": {f"{i},{j}": [self.c[i][j].real, self.c[i][j].imag]
                  for i in range(n + 1) for j in range(i) if self.c[i][j] != 0},
            "normalized": self.normalized,
        }


def make_params(n: int, lam, c=None) -> SolutionParams:
    """Raw (unvalidated) parameters; ``c`` may be a dict {(i, j): value}."""
    cc = [[0j] * (n + 1) for _ in range(n + 1)]
    if c is not None:
        items = c.items() if isinstance(c, dict) else (
            ((i, j), c[i][j]) for i in range(n + 1) for j in range(i))
        for (i, j), v in items:
            if not 0 <= j < i <= n:
                raise ValidationError(f"c index ({i},{j}) is not strictly lower triangular",
                                      field=f"c[{i},{j}]")
            cc[i][j] = complex(v)
    return SolutionParams(lam=tuple(float(x) for x in lam), c=tuple(tuple(r) for r in cc))


def validate_params(cd: CartanData, raw: SolutionParams, autonormalize: bool = True) -> SolutionParams:
    """Check positivity and admissibility; optionally enforce the product rule.

    With ``autonormalize`` lambda_0 is rescaled so that the product of all
    weights equals :func:`lambda_product_target`, and forbidden c_ij are set
    to zero (listed in ``coerced``).  Without it a forbidden coefficient is
    an error, and an unmet product rule is recorded as ``normalized=False``.
    """
    n = cd.n
    if len(raw.lam) != n + 1:
        raise ValidationError(f"lambda must have {n + 1} entries, got {len(raw.lam)}", field="lambda")
    for k, v in enumerate(raw.lam):
        if not (np.isfinite(v) and v > 0):
            raise ValidationError(f"lambda_{k} = {v!r} must be positive", field=f"lambda[{k}]")
    if len(raw.c) != n + 1 or any(len(row) != n + 1 for row in raw.c):
        raise ValidationError("c must be an (n+1)x(n+1) array", field="c")

    coerced = []
    c = [list(row) for row in raw.c]
    for i in range(n + 1):
        for j in range(n + 1):
            if j >= i:
                c[i][j] = 0j
                continue
            v = complex(c[i][j])
            if not np.isfinite(v):
                raise ValidationError(f"c_{i}{j} is not finite", field=f"c[{i},{j}]")
            if v != 0 and not coefficient_allowed(cd, i, j):
                if not autonormalize:
                    raise ValidationError(
                        f"c[{i},{j}] must vanish: gamma_{j + 1}+...+gamma_{i} is not an integer",
                        field=f"c[{i},{j}]")
                coerced.append(f"c[{i},{j}]->0")
                v = 0j
            c[i][j] = v

    lam = list(raw.lam)
    target = lambda_product_target(cd)
    log_prod = float(np.sum(np.log(lam)))
    if autonormalize:
        new0 = math.exp(math.log(target) - (log_prod - math.log(lam[0])))
        if new0 != lam[0]:
            coerced.append("lambda[0] rescaled")
        lam[0] = new0
        normalized = True
    else:
        normalized = abs(math.expm1(log_prod - math.log(target))) <= 1e-12
    return SolutionParams(lam=tuple(lam), c=tuple(tuple(r) for r in c),
                          normalized=normalized, coerced=tuple(coerced))


def random_params(cd: CartanData, rng: np.random.Generator, c_scale: float = 1.0,
                  lam_spread: float = 0.5, which_c: str = "all") -> SolutionParams:
    """Random admissible parameters with balanced weights.

    ``which_c``: ``"all"`` (every admissible c_ij), ``"subdiagonal"`` or
    ``"none"`` (rotationally symmetric solution).
    """
    n = cd.n
    base = lambda_product_target(cd) ** (1.0 / (n + 1))
    lam = base * np.exp(rng.uniform(-lam_spread, lam_spread, size=n + 1))
    c = {}
    for i in range(1, n + 1):
        for j in range(i):
            if which_c == "none" or (which_c == "subdiagonal" and j != i - 1):
                continue
            if coefficient_allowed(cd, i, j):
                c[(i, j)] = c_scale * complex(rng.normal(), rng.normal())
    return validate_params(cd, make_params(n, lam, c), autonormalize=True)


class Potentials(NamedTuple):
    """Arrays of shape (n, *z.shape): U^m, U_i and the regular parts."""

    upper: np.ndarray
    lower: np.ndarray
    regular: np.ndarray


@dataclass
class _Minor:
    lam: float
    lam_mp: object
    poly: GenPoly


def _det(rows):
    """Determinant by Gaussian elimination; exact zero for singular input."""
    a = [list(r) for r in rows]
    k = len(a)
    det = mpmath.mpc(1)
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            return mpmath.mpc(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, k):
            fac = a[r][col] / a[col][col]
            if fac != 0:
                for cc in range(col, k):
                    a[r][cc] -= fac * a[col][cc]
    return det


def _mp_exp(x):
    return np.frompyfunc(mpmath.exp, 1, 1)(x)


def _mp_log(x):
    return np.frompyfunc(mpmath.log, 1, 1)(x)


def _mp_abs(z):
    # |z| rounded once at working precision; np.abs would round to double,
    # and that error is amplified by 1/h^2 in difference quotients
    return np.frompyfunc(lambda w: abs(mpmath.mpc(w)), 1, 1)(np.asarray(z, dtype=complex))


class TodaSolution:
    """Evaluator of one global solution; immutable after construction.

    Parameters
    ----------
    cd : CartanData
    params : SolutionParams
        Normally the output of :func:`validate_params`.
    cut_angle : float
        Direction of the branch cut used for non-integer powers.
    """

    def __init__(self, cd: CartanData, params: SolutionParams, cut_angle: float = math.pi):
        if params.n != cd.n:
            raise ValidationError("parameter rank does not match Cartan data")
        self.cd = cd
        self.params = params
        self.cut_angle = float(cut_angle)
        self.q = tuple(build_q(cd, params.c, i) for i in range(cd.n + 1))
        self.q_derivs = tuple(tuple(qi.derivative(p) for p in range(cd.n + 1)) for qi in self.q)
        self._minors = {}
        self._mp_cache = {}
        self._A = cd.A.astype(float)
        self._two_gamma = 2.0 * cd.gamma_f

    @property
    def n(self) -> int:
        return self.cd.n

    def rotated(self, cut_angle: float) -> "TodaSolution":
        return TodaSolution(self.cd, self.params, cut_angle)

    # ---- f and its mixed derivatives ---------------------------------------
    def f_mixed(self, p: int, q: int, z):
        """Sum_i lambda_i q_i^{(p)}(z) conj(q_i^{(q)}(z))."""
        z = np.asarray(z, dtype=complex)
        if not (0 <= p <= self.n and 0 <= q <= self.n):
            raise IndexError("derivative order outside 0..n")
        out = np.zeros(z.shape, dtype=complex)
        for lam, dq in zip(self.params.lam, self.q_derivs):
            out = out + lam * dq[p].eval(z, self.cut_angle) * np.conj(dq[q].eval(z, self.cut_angle))
        return out[()]

    def f(self, z):
        return np.real(self.f_mixed(0, 0, z))

    # ---- Cauchy-Binet minors -----------------------------------------------
    def minors(self, m: int) -> list:
        """Pairs (lambda_S, W_S) for all m-subsets S of {0..n} with W_S != 0."""
        if not 1 <= m <= self.n + 1:
            raise IndexError(f"determinant order {m} outside 1..{self.n + 1}")
        if m in self._minors:
            return self._minors[m]
        e = self.cd.exponents()
        shift = Fraction(m * (m - 1), 2)
        out = []
        with mpmath.workdps(_COEF_DPS):
            C = mpmath.matrix(self.n + 1, self.n + 1)
            for i in range(self.n + 1):
                C[i, i] = 1
                for j in range(i):
                    C[i, j] = mpmath.mpc(self.params.c[i][j])
            lam_mp = [mpmath.mpf(v) for v in self.params.lam]
            subsets = list(itertools.combinations(range(self.n + 1), m))
            for S in subsets:
                terms = []
                for T in subsets:
                    # C is lower triangular: det C[S,T] = 0 unless T <= S entrywise
                    if any(t > s for s, t in zip(S, T)):
                        continue
                    d = _det([[C[s, t] for t in T] for s in S])
                    if d == 0:
                        continue
                    vand = Fraction(1)
                    for a, b in itertools.combinations(T, 2):
                        vand *= e[b] - e[a]
                    terms.append((d * mpmath.mpf(vand.numerator) / vand.denominator,
                                  sum((e[t] for t in T), Fraction(0)) - shift))
                poly = GenPoly(terms)
                if poly:
                    lm = mpmath.fprod(lam_mp[s] for s in S)
                    out.append(_Minor(float(lm), lm, poly))
        self._minors[m] = out
        return out

    def _log_tau_double(self, m, z):
        minors = self.minors(m)
        ell = np.log(np.abs(z))
        emax = max(float(mi.poly.exponents[-1]) for mi in minors)
        emin = min(float(mi.poly.exponents[0]) for mi in minors)
        scale = np.maximum(emax * ell, emin * ell)
        total = np.zeros(z.shape)
        for mi in minors:
            w = mi.poly.eval(z, self.cut_angle, log_scale=scale)
            total = total + mi.lam * (w.real ** 2 + w.imag ** 2)
        with np.errstate(divide="ignore"):
            out = 2.0 * scale + np.log(total)
        if not np.all(np.isfinite(out)):
            raise InvalidSolutionError(f"det_{m}(f) is not positive at some point")
        return out

    def _mp_tables(self, m):
        """Per-minor (lambda_S, [(coef, exponent key)]) plus the distinct
        exponents, converted to mpmath once per precision."""
        key = (m, mpmath.mp.dps)
        if key not in self._mp_cache:
            minors = self.minors(m)
            exps = sorted({s for mi in minors for s in mi.poly.exponents})
            table = [(mi.lam_mp, [(mpmath.mpc(c), s) for c, s in mi.poly.terms]) for mi in minors]
            frac = any(mi.poly.has_fractional_exponent for mi in minors)
            self._mp_cache[key] = (table, [(s, mpmath.mpf(s.numerator) / s.denominator) for s in exps], frac)
        return self._mp_cache[key]

    def _log_tau_mp(self, m, z):
        table, exps, frac = self._mp_tables(m)
        out = np.empty(z.shape, dtype=object)
        for idx, zz in np.ndenumerate(z):
            if zz == 0:
                raise DomainError("evaluation at z = 0")
            L = _mp_branch_log(zz, self.cut_angle, frac)
            pw = {s: mpmath.exp(L * sm) for s, sm in exps}
            tot = mpmath.mpf(0)
            for lam, terms in table:
                w = mpmath.fsum(c * pw[s] for c, s in terms)
                tot += lam * (w.real ** 2 + w.imag ** 2)
            if tot <= 0:
                raise InvalidSolutionError(f"det_{m}(f) is not positive at z={zz}")
            out[idx] = mpmath.log(tot)
        return out

    def log_tau(self, m: int, z, precision: str = "double"):
        """log det_m(f) at ``z`` (no 2^{m(m-1)} factor).

        ``precision="extended"`` returns an object array of mpmath numbers
        computed at :data:`EXTENDED_DPS` digits; callers doing arithmetic on
        them should hold ``mpmath.workdps(EXTENDED_DPS)``.
        """
        z = np.asarray(z, dtype=complex)
        if np.any(z == 0):
            raise DomainError("evaluation at z = 0")
        if precision == "double":
            return self._log_tau_double(m, z)[()]
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                return self._log_tau_mp(m, z)[()]
        raise ValueError(f"unknown precision {precision!r}")

    def log_exp_neg_Um(self, m: int, z, precision: str = "double"):
        """-U^m = log(2^{m(m-1)} det_m f)."""
        if not 1 <= m <= self.n:
            raise IndexError(f"component {m} outside 1..{self.n}")
        lt = self.log_tau(m, z, precision)
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                return lt + m * (m - 1) * mpmath.log(2)
        return lt + m * (m - 1) * math.log(2.0)

    def exp_neg_Um(self, m: int, z, method: str = "minors"):
        """e^{-U^m}(z) as a positive real (may overflow for huge |z|).

        ``method="direct"`` takes the determinant of the matrix of mixed
        derivatives of f, equilibrated by its diagonal, and falls back to
        extended precision when the equilibrated matrix has condition
        number above :data:`CONDITION_SWITCH`.
        """
        if not 1 <= m <= self.n:
            raise IndexError(f"component {m} outside 1..{self.n}")
        if method == "minors":
            return np.exp(self.log_exp_neg_Um(m, z))
        if method != "direct":
            raise ValueError(f"unknown method {method!r}")
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape)
        for idx, zz in np.ndenumerate(z):
            out[idx] = 2.0 ** (m * (m - 1)) * self._direct_det(m, zz)
        return out[()]

    def _direct_det(self, m, z):
        F = np.array([[self.f_mixed(p, q, z) for q in range(m)] for p in range(m)])
        d = np.sqrt(np.real(np.diag(F)))
        if np.any(d <= 0):
            raise InvalidSolutionError("non-positive diagonal in the f-matrix")
        G = F / np.outer(d, d)
        if np.linalg.cond(G) > CONDITION_SWITCH:
            det = self._direct_det_mp(m, z)
        else:
            det = np.linalg.det(G) * np.prod(d) ** 2
        if abs(det.imag) > REALNESS_TOL * abs(det) or det.real <= 0:
            raise InvalidSolutionError(f"det_{m}(f) = {det!r} is not a positive real")
        return det.real

    def _direct_det_mp(self, m, z):
        with mpmath.workdps(EXTENDED_DPS):
            vals = [[dq[p].eval_mp(z, self.cut_angle) for p in range(m)] for dq in self.q_derivs]
            F = mpmath.matrix(m, m)
            for p in range(m):
                for q in range(m):
                    F[p, q] = mpmath.fsum(lam * v[p] * mpmath.conj(v[q])
                                          for lam, v in zip(self.params.lam, vals))
            d = mpmath.det(F)
            return complex(d)

    # ---- potentials --------------------------------------------------------
    def upper_potentials(self, z, precision: str = "double"):
        """Array (n, *z.shape) of U^1..U^n."""
        z = np.asarray(z, dtype=complex)
        rows = [-self.log_exp_neg_Um(m, z, precision) for m in range(1, self.n + 1)]
        dtype = object if precision == "extended" else float
        return np.array(rows, dtype=dtype).reshape((self.n,) + z.shape)

    def potentials(self, z, precision: str = "double") -> Potentials:
        """U^m, U_i = sum_m a_im U^m and U~_i = U_i - 2 gamma_i log|z|."""
        z = np.asarray(z, dtype=complex)
        up = self.upper_potentials(z, precision)
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                low = np.tensordot(self.cd.A, up, axes=1)
                logr = _mp_log(_mp_abs(z))
                two_g = np.array([2 * mpmath.mpf(g.numerator) / g.denominator for g in self.cd.gamma],
                                 dtype=object)
                reg = low - np.multiply.outer(two_g, logr)
            return Potentials(up, low, reg)
        low = np.tensordot(self._A, up, axes=1)
        reg = low - np.multiply.outer(self._two_gamma, np.log(np.abs(z)))
        return Potentials(up, low, reg)

    def weighted_exp(self, z, precision: str = "double"):
        """|z|^{2 gamma_i} e^{U~_i}, shape (n, *z.shape)."""
        z = np.asarray(z, dtype=complex)
        pot = self.potentials(z, precision)
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                absz = _mp_abs(z)
                out = np.empty(pot.regular.shape, dtype=object)
                for i in range(self.n):
                    g = self.cd.gamma[i]
                    w = np.frompyfunc(lambda r, g=g: mpmath.mpf(r) ** (2 * mpmath.mpf(g.numerator) / g.denominator), 1, 1)(absz)
                    out[i] = w * _mp_exp(pot.regular[i])
                return out
        return np.abs(z)[None] ** self._two_gamma.reshape((-1,) + (1,) * z.ndim) * np.exp(pot.regular)

    # ---- PDE residual ------------------------------------------------------
    def pde_residuals(self, z, h: float = 1e-3, richardson: bool = True,
                      precision: str = "double"):
        """|Delta U~_i + sum_j a_ij |z|^{2 gamma_j} e^{U~_j}| for all i.

        Returns an array of shape (n, *z.shape) of floats.
        """
        z = np.asarray(z, dtype=complex)
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                lap = laplacian(lambda p: self.potentials(p, "extended").regular, z, h, richardson)
                src = np.tensordot(self.cd.A, self.weighted_exp(z, "extended"), axes=1)
                res = lap + src
                return np.vectorize(lambda x: float(abs(x)))(res).astype(float)
        lap = laplacian(lambda p: self.potentials(p).regular, z, h, richardson)
        src = np.tensordot(self._A, self.weighted_exp(z), axes=1)
        return np.abs(lap + src)

    def pde_residual(self, i: int, z, h: float = 1e-3, richardson: bool = True,
                     precision: str = "double"):
        if not 1 <= i <= self.n:
            raise IndexError(f"component {i} outside 1..{self.n}")
        return self.pde_residuals(z, h, richardson, precision)[i - 1]

    def fd_convergence_order(self, z, hs=None, richardson: bool = True,
                             precision: str = "double") -> float:
        """Observed order of the residual under step halving.

        Least-squares slope of log(max_i residual) against log h.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if hs is None:
            r = float(np.min(np.abs(z)))
            hs = [0.08 * r, 0.04 * r, 0.02 * r]
        res = [float(np.max(self.pde_residuals(z, h, richardson, precision))) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
        return float(slope)

"""Total masses  m_i = int_{R^2} |y|^{2 gamma_i} e^{U~_i} dy.

Polar quadrature: tanh-sinh in the radius on geometric panels
[0, 1], [1, 10], ..., [R/10, R] (the open rule absorbs the r^{2 gamma_i + 1}
endpoint behaviour), trapezoid in the angle at points offset from the branch
cut.  Beyond R the ring mean decays like c r^{p}, p = -4 - 2 gamma_{n+1-i},
and the tail 2 pi c R^{p+2} / (-(p+2)) is added analytically.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np
from scipy.integrate import tanhsinh

from .asymptotics import ring_angles
from .cartan import CartanData, decay_exponent
from .errors import ConfigError, DomainError
from .solution import EXTENDED_DPS, TodaSolution

__all__ = ["MassReport", "adaptive_disk_integral", "disk_integral", "flux_identity", "liouville_mass", "mass", "masses", "ring_mean"]

SLOPE_TOL = 0.05
MAX_ATTEMPTS = 3
_TAIL_STEP = 0.05


def flux_identity(cd: CartanData) -> list:
    """Masses predicted by integrating the system over large disks:

        m_j = sum_i a^{ji} (4 pi gamma_i + 8 pi + 4 pi gamma_{n+1-i}).

    This is a derived relation (source strength plus decay slope); it is
    confirmed against direct quadrature in the test-suite.
    """
    n = cd.n
    g = [float(x) for x in cd.gamma]
    t = [4 * math.pi * g[i] + 8 * math.pi + 4 * math.pi * g[n - 1 - i] for i in range(n)]
    return [float(sum(float(cd.Ainv_exact[j][i]) * t[i] for i in range(n))) for j in range(n)]


def liouville_mass(lam0: float, lam1: float) -> float:
    """2 pi int_0^inf r (lam0 + lam1 r^2)^{-2} dr = pi / (lam0 lam1)."""
    return math.pi / (lam0 * lam1)


def _integrand(sol: TodaSolution, i: int, precision: str):
    """Vectorised ring-mean integrand r -> r * mean_theta e^{U_i}."""

    def ring(r, angles):
        z = np.asarray(r, dtype=float)[..., None] * np.exp(1j * angles)
        if precision == "extended":
            with mpmath.workdps(EXTENDED_DPS):
                low = sol.potentials(z, "extended").lower[i - 1]
                w = np.frompyfunc(lambda x: float(mpmath.exp(x)), 1, 1)(low).astype(float)
        else:
            w = np.exp(sol.potentials(z).lower[i - 1])
        return w.mean(axis=-1)

    return ring


def ring_mean(sol: TodaSolution, i: int, r, angles: int = 64, precision: str = "double"):
    """mean over a ring of e^{U_i} = |y|^{2 gamma_i} e^{U~_i}."""
    th = ring_angles(angles, sol.cut_angle)
    return _integrand(sol, i, precision)(r, th)


@dataclass
class MassReport:
    """Mass of one component.  ``error`` bounds |value - half_value| plus the
    tail-model uncertainty; ``tail`` is the analytic contribution beyond R."""

    component: int
    value: float
    error: float
    tail: float
    half_value: float
    predicted: float
    R: float
    attempts: int
    tail_slope: float
    predicted_slope: float
    angles: int
    panels: list = field(default_factory=list)

    @property
    def rel_to_predicted(self) -> float:
        return abs(self.value - self.predicted) / abs(self.predicted)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def disk_integral(ring, R, th, rtol=1e-13, maxlevel=10, atol=0.0):
    """2 pi int_0^R r ring(r, th) dr, with ``ring`` the angular mean at the
    nodes ``th``.  Returns (value, tanh-sinh error, panel edges, raw result).

    ``atol`` (per panel) stops refinement of panels whose integral is
    essentially zero, which a relative tolerance alone never accepts.
    """
    edges = [0.0] + [10.0 ** k for k in range(0, int(math.floor(math.log10(R) + 1e-12)) + 1)]
    edges = [e for e in edges if e < R] + [R]
    a = np.array(edges[:-1])
    b = np.array(edges[1:])
    # panels that stop at maxlevel are still covered by the half-resolution bound
    res = tanhsinh(lambda r: r * ring(r, th), a, b, rtol=rtol, atol=atol, maxlevel=maxlevel)
    return 2.0 * math.pi * float(np.sum(res.integral)), float(np.sum(res.error)), edges, res


def _tail(ring, th, R, p):
    """Local slope at R and the tail beyond R from c r^p (1 + b r^-2).

    Returns (slope, tail, model_error); the error is the size of the r^-2
    correction, which bounds what a pure power law would miss.
    """
    rr = R * np.exp(np.array([-_TAIL_STEP, 0.0, _TAIL_STEP]))
    vals = ring(rr, th)
    if np.any(vals <= 0):
        raise DomainError("ring mean not positive at the truncation radius")
    logv = np.log(vals)
    slope = float((logv[2] - logv[0]) / (2 * _TAIL_STEP))
    X = np.stack([np.ones(3), (rr / R) ** -2.0], axis=1)
    (logc, b), *_ = np.linalg.lstsq(X, logv - p * np.log(rr / R), rcond=None)
    c = math.exp(logc) * R ** -p
    lead = c * R ** (p + 2) / (-(p + 2))
    corr = c * b * R ** (p + 2) / (-p)
    return slope, 2.0 * math.pi * (lead + corr), 2.0 * math.pi * abs(corr)


def adaptive_disk_integral(ring, R, cut_angle, angles=64, rtol=1e-13, maxlevel=10,
                           angle_tol=1e-11, max_angles=1024, atol=0.0, quad_atol=0.0):
    """:func:`disk_integral` with the angle count doubled until the value
    moves by at most ``max(atol, angle_tol * |value|)``.  ``quad_atol`` is
    the per-panel absolute tolerance handed to the radial rule.

    Returns (value, half_value, tanh-sinh error, angles used, panel edges).
    """
    half = disk_integral(ring, R, ring_angles(angles // 2, cut_angle), rtol,
                         max(maxlevel - 1, 1), quad_atol)[0]
    while True:
        full, qerr, edges, _ = disk_integral(ring, R, ring_angles(angles, cut_angle), rtol, maxlevel,
                                             quad_atol)
        if abs(full - half) <= max(atol, angle_tol * abs(full)) or 2 * angles > max_angles:
            return full, half, qerr, angles, edges
        half = full
        angles *= 2


def mass(sol: TodaSolution, i: int, R: float = 1e3, angles: int = 64,
         precision: str = "double", rtol: float = 1e-13, maxlevel: int = 10,
         angle_tol: float = 1e-11, max_angles: int = 1024) -> MassReport:
    """Mass of component ``i`` (1-based) with tail correction.

    The angle count starts at ``angles`` and doubles until the change from
    the half-resolution value is below ``angle_tol`` relative (or
    ``max_angles`` is reached).  The tail amplitude is fitted at r = R from
    the ring mean; if the local log-slope there differs from the predicted
    decay by more than 5 %, R is multiplied by 10 and the fit repeated, at
    most three attempts.
    """
    cd = sol.cd
    if not 1 <= i <= cd.n:
        raise IndexError(f"component {i} outside 1..{cd.n}")
    if not R >= 10:
        raise ConfigError("truncation radius must be at least 10")
    if angles < 8 or angles % 2:
        raise ConfigError("angle count must be even and at least 8")
    p = decay_exponent(cd, i)
    ring = _integrand(sol, i, precision)

    th_tail = ring_angles(max(angles, 128), sol.cut_angle)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        slope, tail, tail_err = _tail(ring, th_tail, R, p)
        if abs(slope - p) <= SLOPE_TOL * abs(p):
            break
        if attempt == MAX_ATTEMPTS:
            raise DomainError(
                f"tail fit unstable: local slope {slope:.4g} vs predicted {p:.4g} at R = {R:.3g}")
        R *= 10.0

    full, half, qerr, angles, edges = adaptive_disk_integral(
        ring, R, sol.cut_angle, angles, rtol, maxlevel, angle_tol, max_angles)
    return MassReport(
        component=i,
        value=full + tail,
        error=abs(full - half) + qerr + tail_err,
        tail=tail,
        half_value=half + tail,
        predicted=flux_identity(cd)[i - 1],
        R=float(R),
        attempts=attempt,
        tail_slope=slope,
        predicted_slope=float(p),
        angles=angles,
        panels=[float(e) for e in edges],
    )


def masses(sol: TodaSolution, R: float = 1e3, **kw) -> list:
    return [mass(sol, i, R, **kw) for i in range(1, sol.n + 1)]

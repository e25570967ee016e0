"""Integral identities behind the vanishing argument for kernel elements.

* :class:`DiskGreen` - Dirichlet Green's function of B(0, R) by images.
* :func:`delta_reproduction` - checks -Delta G = delta against bump tests.
* :func:`boundary_integral` / :func:`orthogonality_integral` - the ring
  integral  sum_i int (a_i cos t + b_i sin t)(phi^i - r d_r phi^i) r dt.
* :func:`ibp_check` - the same quantity as an area integral, obtained by
  pairing the linearized equation with the linear field a_i y_1 + b_i y_2.

For a model field phi = (d cos t + q sin t) / r the ring integral equals
2 pi (a d + b q) exactly; :func:`fit_boundary_constant` measures the
constant K in  integral -> K (a d + b q)  on a real kernel element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import tanhsinh

from .asymptotics import predict_expansion, ring_angles
from .errors import DomainError, ValidationError
from .quad import adaptive_disk_integral
from .solution import TodaSolution
from .stencils import radial_derivative
from .variation import KernelElement, decay_profile

__all__ = [
    "Bump",
    "DiskGreen",
    "PolyField",
    "boundary_integral",
    "cross_response",
    "delta_reproduction",
    "fit_boundary_constant",
    "ibp_check",
    "model_field",
    "orthogonality_integral",
]

RING_ANGLES = 128
COINCIDENT_TOL = 1e-14


@dataclass(frozen=True)
class DiskGreen:
    """G(y, eta) = -(1/2pi) log|y - eta|
                   + (1/4pi) log((R^4 - 2 R^2 y.eta + |y|^2 |eta|^2) / R^2).

    The second term is the image-charge correction written so that it is
    continuous at y = 0 (where it equals (1/2pi) log R).
    """

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValidationError("disk radius must be positive", field="R")

    def __call__(self, y, eta):
        return self._eval(y, eta, check=True)

    def _eval(self, y, eta, check):
        y = np.asarray(y, dtype=complex)
        eta = np.asarray(eta, dtype=complex)
        R2 = self.R * self.R
        if np.any(np.abs(y) > self.R * (1 + 1e-12)) or np.any(np.abs(eta) > self.R * (1 + 1e-12)):
            raise DomainError("Green's function evaluated outside the closed disk")
        d = np.abs(y - eta)
        if check and np.any(d <= COINCIDENT_TOL * max(self.R, 1.0)):
            raise DomainError("Green's function at coincident points")
        dot = (y * np.conj(eta)).real
        img = (R2 * R2 - 2 * R2 * dot + np.abs(y) ** 2 * np.abs(eta) ** 2) / R2
        return -np.log(d) / (2 * math.pi) + np.log(img) / (4 * math.pi)


def green(gd: DiskGreen, y, eta):
    return gd(y, eta)


@dataclass(frozen=True)
class Bump:
    """Test function (1 - |eta - c|^2 / rho^2)^k on the disk |eta - c| < rho."""

    center: complex
    rho: float
    k: int = 4

    def __post_init__(self):
        if self.k < 3:
            raise ValidationError("bump exponent must be at least 3 for a C^2 test function", field="k")
        if not self.rho > 0:
            raise ValidationError("bump radius must be positive", field="rho")

    def _s(self, eta):
        return np.abs(np.asarray(eta, dtype=complex) - self.center) ** 2 / self.rho ** 2

    def __call__(self, eta):
        s = self._s(eta)
        return np.where(s < 1, np.clip(1 - s, 0, None) ** self.k, 0.0)

    def laplacian(self, eta):
        """(4k / rho^2)(1 - s)^{k-2}(k s - 1) inside, 0 outside."""
        s = self._s(eta)
        k = self.k
        inside = s < 1
        base = np.clip(1 - s, 0, None)
        return np.where(inside, 4 * k / self.rho ** 2 * base ** (k - 2) * (k * s - 1), 0.0)


def delta_reproduction(gd: DiskGreen, y: complex, bump: Bump, angles: int = 256) -> tuple:
    """(int_{B_R} G(y, .) Delta(bump), -bump(y)).

    Polar coordinates centred at y when y lies in the support (removing the
    logarithmic singularity), otherwise centred at the bump.  Radial
    integrals by tanh-sinh, angular by the trapezoid rule.
    """
    y = complex(y)
    if abs(bump.center) + bump.rho > gd.R:
        raise ValidationError("bump support leaves the disk", field="bump")
    th = 2 * math.pi * (np.arange(angles) + 0.5) / angles
    u = np.exp(1j * th)
    inside = abs(y - bump.center) < bump.rho
    if inside:
        # ray y + t u leaves the support at t_+ (root of |y + t u - c| = rho)
        w = y - bump.center
        bb = (w * np.conj(u)).real
        tmax = -bb + np.sqrt(bb * bb - (abs(w) ** 2 - bump.rho ** 2))
        origin = y
    else:
        tmax = np.full(angles, bump.rho)
        origin = bump.center

    def f(t, ang, tm):
        eta = origin + t * tm * np.exp(1j * ang)
        # t log t -> 0 at the pole; the check would trip on tanh-sinh nodes near it
        with np.errstate(divide="ignore", invalid="ignore"):
            g = gd._eval(y, eta, check=False)
        return np.where(t > 0, g * t, 0.0) * bump.laplacian(eta) * tm * tm

    res = tanhsinh(f, 0.0, 1.0, args=(th, tmax), rtol=1e-13)
    value = float(np.mean(res.integral) * 2 * math.pi)
    return value, float(-bump(y))


@dataclass(frozen=True)
class PolyField:
    """Degree <= 2 polynomial field  c + x y_1 + y y_2 + xx y_1^2 + xy y_1 y_2 + yy y_2^2."""

    c: float = 0.0
    x: float = 0.0
    y: float = 0.0
    xx: float = 0.0
    xy: float = 0.0
    yy: float = 0.0

    def gradient_at_origin(self) -> tuple:
        return (self.x, self.y)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        u, v = z.real, z.imag
        return self.c + self.x * u + self.y * v + self.xx * u * u + self.xy * u * v + self.yy * v * v


def _grads(a, b, n):
    a = np.broadcast_to(np.asarray(a, dtype=float), (n,))
    b = np.broadcast_to(np.asarray(b, dtype=float), (n,))
    return a, b


def boundary_integral(phi_up, a, b, r: float, n: int, angles: int = RING_ANGLES,
                      cut_angle: float = math.pi, rel_step: float = 0.02) -> float:
    """sum_i int_0^{2pi} (a_i cos t + b_i sin t)(phi^i - r d_r phi^i) r dt.

    ``phi_up(z)`` returns shape (n, *z.shape); 128-point trapezoid in t and
    a fourth-order log-radius difference for r d_r.
    """
    a, b = _grads(a, b, n)
    th = ring_angles(angles, cut_angle)
    z = r * np.exp(1j * th)
    phi = np.asarray(phi_up(z), dtype=float)
    rdr = np.asarray(radial_derivative(phi_up, z, rel_step), dtype=float)
    weight = a[:, None] * np.cos(th) + b[:, None] * np.sin(th)
    return float(np.sum(np.mean(weight * (phi - rdr), axis=-1)) * 2 * math.pi * r)


def model_field(d, q):
    """Synthetic phi^i = (d_i cos t + q_i sin t) / r."""
    d = np.asarray(d, dtype=float)
    q = np.asarray(q, dtype=float)

    def phi(z):
        z = np.asarray(z, dtype=complex)
        r2 = np.abs(z) ** 2
        return (np.multiply.outer(d, z.real) + np.multiply.outer(q, z.imag)) / r2

    return phi


@dataclass
class OrthogonalityResult:
    value: float
    r: float
    weights: float            # sum_i (a_i d_i + b_i q_i) from the decay profile
    prediction_pi: float
    prediction_2pi: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def orthogonality_integral(sol: TodaSolution, ke: KernelElement, hbar_grad, r: float,
                           angles: int = RING_ANGLES, profile=None) -> OrthogonalityResult:
    """Ring integral for a kernel element with the closed-form predictions
    pi * sum(a d + b q) and 2 pi * sum(a d + b q), (d, q) from the decay
    profile of ``ke``.  ``hbar_grad`` is a pair (a, b) of length-n vectors.
    """
    n = sol.n
    a, b = _grads(*hbar_grad, n)
    val = boundary_integral(ke.upper, a, b, r, n, angles, sol.cut_angle)
    if profile is None:
        profile = decay_profile(ke, radii=np.logspace(2, 3, 5))
    w = float(np.dot(a, profile.d) + np.dot(b, profile.q))
    return OrthogonalityResult(val, float(r), w, math.pi * w, 2 * math.pi * w)


def cross_response(sol: TodaSolution, ke: KernelElement, r: float,
                   angles: int = RING_ANGLES) -> tuple:
    """Responses of the ring integral to each unit gradient slot.

    Returns (diagonal, max cross, table) where the diagonal slot is a_m for
    an alpha element and b_m for a beta element, m = n + 1 - k.
    """
    kind, k = ke.param
    if kind not in ("alpha", "beta"):
        raise ValidationError("cross-response is defined for alpha/beta elements", field="param")
    n = sol.n
    m = n + 1 - k
    table = {}
    for slot in ("a", "b"):
        for l in range(1, n + 1):
            a = np.zeros(n)
            b = np.zeros(n)
            (a if slot == "a" else b)[l - 1] = 1.0
            table[f"{slot}{l}"] = boundary_integral(ke.upper, a, b, r, n, angles, sol.cut_angle)
    diag_key = ("a" if kind == "alpha" else "b") + str(m)
    diag = table[diag_key]
    cross = max(abs(v) for key, v in table.items() if key != diag_key)
    return diag, cross, table


def fit_boundary_constant(sol: TodaSolution, ke: KernelElement, radii=(1e2, 3e2, 1e3, 3e3),
                          angles: int = RING_ANGLES) -> dict:
    """Fit  I(r) = I_inf + C / r  for the unit slot of an alpha/beta element
    and report K = I_inf / (2 D1 / D) against pi and 2 pi."""
    kind, k = ke.param
    n = sol.n
    m = n + 1 - k
    a = np.zeros(n)
    b = np.zeros(n)
    (a if kind == "alpha" else b)[m - 1] = 1.0
    radii = np.asarray(radii, dtype=float)
    vals = np.array([boundary_integral(ke.upper, a, b, r, n, angles, sol.cut_angle) for r in radii])
    X = np.stack([np.ones_like(radii), 1.0 / radii], axis=1)
    inf, _ = np.linalg.lstsq(X, vals, rcond=None)[0]
    coeff = predict_expansion(sol, m).first_coefficient
    K = float(inf / coeff)
    return {
        "radii": [float(r) for r in radii],
        "values": [float(v) for v in vals],
        "limit": float(inf),
        "first_coefficient": float(coeff),
        "K": K,
        "K_minus_pi": K - math.pi,
        "K_minus_2pi": K - 2 * math.pi,
    }


def ibp_check(sol: TodaSolution, ke: KernelElement, hbar, R: float = 1e3,
              angles: int = RING_ANGLES, rtol: float = 1e-10, angle_tol: float = 1e-8) -> tuple:
    """(lhs, rhs) of the integration-by-parts identity on B_R.

    lhs = sum_i int_{B_R} (a_i y_1 + b_i y_2) |y|^{2 gamma_i} e^{U~_i} phi_i,
    rhs = the ring integral at r = R, where (a_i, b_i) = grad hbar_i(0).
    The area integral doubles its angle count (from 64) until stable to
    ``angle_tol``; the ring integral uses ``angles`` points.
    ``hbar`` is a sequence of n :class:`PolyField` (or (a, b) pairs).
    """
    n = sol.n
    if len(hbar) != n:
        raise ValidationError(f"need {n} hbar fields", field="hbar")
    grads = [h.gradient_at_origin() if isinstance(h, PolyField) else tuple(h) for h in hbar]
    a = np.array([g[0] for g in grads], dtype=float)
    b = np.array([g[1] for g in grads], dtype=float)
    rhs = boundary_integral(ke.upper, a, b, R, n, angles, sol.cut_angle)
    if not np.any(a) and not np.any(b):
        return 0.0, rhs

    def ring(r, t):
        z = np.asarray(r, dtype=float)[..., None] * np.exp(1j * t)
        psi = np.multiply.outer(a, z.real) + np.multiply.outer(b, z.imag)
        vals = np.sum(psi * sol.weighted_exp(z) * ke.lower(z), axis=0)
        return vals.mean(axis=-1)

    lhs = adaptive_disk_integral(ring, R, sol.cut_angle, 64, rtol, angle_tol=angle_tol,
                                 atol=1e-9, quad_atol=1e-12)[0]
    return float(lhs), float(rhs)

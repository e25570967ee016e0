"""Elements of the linearized Toda kernel from parameter derivatives.

Differentiating the solution family in a parameter p gives
phi^l = -dU^l/dp, which solves

    Delta phi^i + |y|^{2 gamma_i} e^{U~_i} phi_i = 0,   phi_i = sum_m a_im phi^m.

Derivatives are central differences on the exact evaluator with one
Richardson level.  Weights are varied on the constraint manifold: changing
lambda_k rescales lambda_0 so the product rule keeps holding.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .asymptotics import predict_expansion, ring_angles
from .errors import ConfigError, ValidationError
from .solution import EXTENDED_DPS, TodaSolution, coefficient_allowed
from .stencils import laplacian

__all__ = [
    "DecayProfile",
    "KernelElement",
    "decay_profile",
    "kernel_parameters",
    "linearized_residual",
    "parameter_derivative",
]

_KINDS = ("lambda", "loglambda", "alpha", "beta")
MIN_STEP = 1e-7


def kernel_parameters(cd) -> list:
    """Parameters whose derivatives produce the 1/r kernel modes: alpha and
    beta of c_{k,k-1} for every k in I2."""
    return [(kind, k) for k in sorted(cd.I2) for kind in ("alpha", "beta")]


@dataclass(frozen=True)
class KernelElement:
    """phi^l = -dU^l/dp for one parameter ``p = (kind, index)``.

    ``kind`` is ``lambda`` (d/d lambda_k), ``loglambda`` (d/d log lambda_k,
    an O(1) field however small the weight), ``alpha`` or ``beta`` (real and
    imaginary part of c_{k,k-1}).  ``scale`` and ``bump`` exist only to build corrupted
    fields for negative controls: phi^l -> scale_l phi^l + bump_l |z|^2.
    """

    base: TodaSolution
    param: tuple
    step: float = 1e-3
    richardson: bool = True
    scale: tuple | None = None
    bump: tuple | None = None

    def __post_init__(self):
        kind, k = self.param
        n = self.base.n
        if kind not in _KINDS:
            raise ValidationError(f"unknown parameter kind {kind!r}")
        if kind in ("lambda", "loglambda") and not 1 <= k <= n:
            raise ValidationError(f"lambda index {k} outside 1..{n}")
        if kind in ("alpha", "beta"):
            if not 1 <= k <= n:
                raise ValidationError(f"coefficient index {k} outside 1..{n}")
            if not coefficient_allowed(self.base.cd, k, k - 1):
                raise ValidationError(f"c[{k},{k - 1}] is fixed to zero for this gamma")
        if self.step < MIN_STEP:
            raise ConfigError(f"parameter step {self.step} below the precision floor {MIN_STEP}")

    @property
    def name(self) -> str:
        return f"{self.param[0]}_{self.param[1]}"

    def perturbed(self, t: float) -> TodaSolution:
        """Base solution with the parameter moved by ``t``."""
        kind, k = self.param
        p = self.base.params
        if kind in ("lambda", "loglambda"):
            new = p.lam[k] * math.exp(t) if kind == "loglambda" else p.lam[k] + t
            if not new > 0:
                raise ValidationError("perturbation makes a weight non-positive", field=f"lambda[{k}]")
            q = p.with_lambda(k, new).with_lambda(0, p.lam[0] * p.lam[k] / new)
        else:
            dc = t if kind == "alpha" else 1j * t
            q = p.with_c(k, k - 1, p.c[k][k - 1] + dc)
        return TodaSolution(self.base.cd, q, self.base.cut_angle)

    def corrupted(self, component: int = 1, factor: float = 1.1,
                  bump: float = 1e-2) -> "KernelElement":
        """A field that is *not* in the kernel, for negative controls.

        Rescaling alone is not enough when n = 1 (the equation is linear),
        hence the additive non-harmonic ``bump * |z|^2``.
        """
        sc = [1.0] * self.base.n
        bp = [0.0] * self.base.n
        sc[component - 1] = factor
        bp[component - 1] = bump
        return KernelElement(self.base, self.param, self.step, self.richardson, tuple(sc), tuple(bp))

    def upper(self, z, precision: str = "double"):
        """phi^1..phi^n at ``z``, shape (n, *z.shape)."""
        z = np.asarray(z, dtype=complex)
        h = self.step
        steps = [h, h / 2] if self.richardson else [h]
        ctx = mpmath.workdps(EXTENDED_DPS) if precision == "extended" else _null()
        with ctx:
            diffs = []
            for t in steps:
                t = self._abs_step(t)
                plus = self.perturbed(t).upper_potentials(z, precision)
                minus = self.perturbed(-t).upper_potentials(z, precision)
                diffs.append(-(plus - minus) / (2 * t))
            out = diffs[0] if not self.richardson else (4 * diffs[1] - diffs[0]) / 3
            if self.scale is not None:
                out = out * np.array(self.scale).reshape((-1,) + (1,) * z.ndim)
            if self.bump is not None:
                out = out + np.multiply.outer(np.array(self.bump), np.abs(z) ** 2)
        return out

    def _abs_step(self, h):
        """Raw weight steps scale with the weight, so the step stays small
        relative to lambda_k however the weights are balanced."""
        kind, k = self.param
        return h * self.base.params.lam[k] if kind == "lambda" else h

    def lower(self, z, precision: str = "double"):
        up = self.upper(z, precision)
        A = self.base.cd.A if precision == "extended" else self.base.cd.A.astype(float)
        return np.tensordot(A, up, axes=1)


class _null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def parameter_derivative(sol: TodaSolution, param, step: float = 1e-3) -> KernelElement:
    """Kernel element -dU/dp for ``param = (kind, index)``, kind in
    ``lambda``/``alpha``/``beta``."""
    ke = KernelElement(sol, tuple(param), step)
    ke.perturbed(ke._abs_step(step))
    ke.perturbed(-ke._abs_step(step))
    return ke


def linearized_residual(sol: TodaSolution, ke: KernelElement, z, h: float = 1e-2,
                        precision: str = "double"):
    """max_i |Delta phi^i + |z|^{2 gamma_i} e^{U~_i} phi_i| at each ``z``."""
    z = np.asarray(z, dtype=complex)
    if precision == "extended":
        with mpmath.workdps(EXTENDED_DPS):
            lap = laplacian(lambda p: ke.upper(p, "extended"), z, h)
            phi_low = np.tensordot(sol.cd.A, ke.upper(z, "extended"), axes=1)
            res = lap + sol.weighted_exp(z, "extended") * phi_low
            res = np.vectorize(lambda x: float(abs(x)), otypes=[float])(res)
    else:
        lap = laplacian(ke.upper, z, h)
        res = np.abs(lap + sol.weighted_exp(z) * ke.lower(z))
    return res.max(axis=0)


@dataclass
class DecayProfile:
    """Ring Fourier content of a kernel element.

    ``cos_amp[l, k]`` / ``sin_amp[l, k]`` are the cos/sin mode amplitudes of
    phi^{l+1} on the ring of radius ``radii[k]``; ``d``/``q`` are fitted
    coefficients of cos t / r and sin t / r, ``d2``/``q2`` of the 1/r^2 term.
    ``rms`` is the root-mean-square of each component on each ring.
    """

    radii: np.ndarray
    cos_amp: np.ndarray
    sin_amp: np.ndarray
    rms: np.ndarray
    d: np.ndarray
    q: np.ndarray
    d2: np.ndarray
    q2: np.ndarray

    def decay_exponent(self, component: int) -> float:
        """Slope of -log(rms) against log r for phi^{component}; ``inf`` if
        the component vanishes to working precision on some ring."""
        rms = self.rms[component - 1]
        if np.any(rms == 0):
            return math.inf
        y = np.log(rms)
        return float(-np.polyfit(np.log(self.radii), y, 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "component", "mode", "amplitude"])
        for k, r in enumerate(self.radii):
            for l in range(self.cos_amp.shape[0]):
                w.writerow([repr(float(r)), l + 1, "cos", repr(float(self.cos_amp[l, k]))])
                w.writerow([repr(float(r)), l + 1, "sin", repr(float(self.sin_amp[l, k]))])
        return buf.getvalue()


def decay_profile(ke: KernelElement, radii=None, angles: int = 64,
                  precision: str = "double") -> DecayProfile:
    """Ring Fourier analysis of phi^l by the ``angles``-point trapezoid rule."""
    if radii is None:
        radii = np.logspace(2, 3, 5)
    radii = np.asarray(sorted(radii), dtype=float)
    th = ring_angles(angles, ke.base.cut_angle)
    R, TH = np.meshgrid(radii, th, indexing="ij")
    phi = ke.upper(R * np.exp(1j * TH), precision)
    phi = np.asarray(phi, dtype=float)
    cos_amp = 2.0 * np.mean(phi * np.cos(TH), axis=-1)
    sin_amp = 2.0 * np.mean(phi * np.sin(TH), axis=-1)
    rms = np.sqrt(np.mean(phi ** 2, axis=-1))
    X = np.stack([1.0 / radii, radii ** -2.0], axis=1)
    if len(radii) >= 2:
        fc = np.linalg.lstsq(X, cos_amp.T, rcond=None)[0]
        fs = np.linalg.lstsq(X, sin_amp.T, rcond=None)[0]
    else:
        fc = np.vstack([cos_amp.T * radii[0], np.zeros(cos_amp.shape[0])])
        fs = np.vstack([sin_amp.T * radii[0], np.zeros(sin_amp.shape[0])])
    return DecayProfile(radii, cos_amp, sin_amp, rms, fc[0], fs[0], fc[1], fs[1])


def expected_first_mode(sol: TodaSolution, ke: KernelElement) -> tuple:
    """Predicted (component l, amplitude of the 1/r mode, mode name) for an
    alpha/beta element: only l = m with m = n + 1 - k carries it."""
    kind, k = ke.param
    if kind not in ("alpha", "beta"):
        return None
    m = sol.n + 1 - k
    rep = predict_expansion(sol, m)
    return m, rep.first_coefficient, "cos" if kind == "alpha" else "sin"

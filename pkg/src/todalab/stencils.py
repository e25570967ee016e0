"""Finite-difference Laplacian with Richardson extrapolation.

The evaluated callable receives a complex array of stencil points of shape
``(k, N)`` and must return an array of shape ``(..., k, N)``.  Object arrays
of :mod:`mpmath` numbers pass through unchanged, so the same code serves the
extended-precision path as long as the caller holds an mpmath precision
context.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["laplacian", "radial_derivative"]

_OFFSETS = np.array([0, 1, -1, 1j, -1j])


def _check(z, h):
    if h <= 0:
        raise DomainError("step must be positive")
    if np.any(np.abs(z) <= 2 * h):
        raise DomainError("stencil reaches the singular point z = 0")


def laplacian(func, z, h: float, richardson: bool = True):
    """5-point Laplacian of ``func`` at ``z``; with ``richardson`` the
    combination ``(4 L_{h/2} - L_h) / 3`` cancelling the h^2 term.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.reshape(-1)
    _check(zf, h)
    steps = [h, h / 2] if richardson else [h]
    pts = [zf]
    for hh in steps:
        pts.extend(zf + hh * o for o in _OFFSETS[1:])
    v = func(np.stack(pts))
    c = v[..., 0, :]

    def lap(k, hh):
        s = v[..., 1 + 4 * k, :] + v[..., 2 + 4 * k, :] + v[..., 3 + 4 * k, :] + v[..., 4 + 4 * k, :]
        return (s - 4 * c) / (hh * hh)

    out = lap(0, h)
    if richardson:
        out = (4 * lap(1, h / 2) - out) / 3
    return out.reshape(out.shape[:-1] + shape)


def radial_derivative(func, z, rel_step: float = 0.02, richardson: bool = True):
    """``r d/dr`` of ``func`` at ``z``, as a derivative in ``t = log r``.

    Central differences in ``t`` with one Richardson level; fourth order.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.reshape(-1)
    if np.any(zf == 0):
        raise DomainError("radial derivative at z = 0")
    steps = [rel_step, rel_step / 2] if richardson else [rel_step]
    pts = []
    for t in steps:
        pts.extend([zf * np.exp(t), zf * np.exp(-t)])
    v = func(np.stack(pts))

    def cd(k, t):
        return (v[..., 2 * k, :] - v[..., 2 * k + 1, :]) / (2 * t)

    out = cd(0, rel_step)
    if richardson:
        out = (4 * cd(1, rel_step / 2) - out) / 3
    return out.reshape(out.shape[:-1] + shape)

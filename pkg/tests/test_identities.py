import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from todalab.errors import DomainError, ValidationError
from todalab.identities import (
    Bump,
    DiskGreen,
    PolyField,
    boundary_integral,
    cross_response,
    delta_reproduction,
    fit_boundary_constant,
    green,
    ibp_check,
    model_field,
    orthogonality_integral,
)
from todalab.stencils import laplacian
from todalab.variation import KernelElement, kernel_parameters

R = 3.0
inner = st.tuples(st.floats(0.01, 0.95), st.floats(-math.pi, math.pi)).map(lambda t: R * t[0] * np.exp(1j * t[1]))
rim = st.floats(-math.pi, math.pi).map(lambda t: R * np.exp(1j * t))


def _images(y, eta, R):
    # textbook form with the reflected point R^2 y / |y|^2, valid for y != 0
    ystar = R * R * y / abs(y) ** 2
    return -math.log(abs(y - eta)) / (2 * math.pi) + math.log(abs(y) / R * abs(ystar - eta)) / (2 * math.pi)


@given(inner, inner)
def test_green_matches_images_formula(y, eta):
    if abs(y - eta) < 1e-6:
        return
    assert green(DiskGreen(R), y, eta) == pytest.approx(_images(y, eta, R), abs=1e-12)


@given(inner, rim)
def test_green_vanishes_on_boundary(y, eta):
    assert abs(DiskGreen(R)(y, eta)) <= 1e-12


@given(inner, inner)
def test_green_symmetric(y, eta):
    if abs(y - eta) < 1e-6:
        return
    gd = DiskGreen(R)
    assert abs(gd(y, eta) - gd(eta, y)) <= 1e-12


def test_green_at_origin_is_limit():
    gd = DiskGreen(R)
    eta = 1.1 - 0.4j
    # y = 0: -(1/2pi) log|eta| + (1/2pi) log R
    assert gd(0j, eta) == pytest.approx((math.log(R) - math.log(abs(eta))) / (2 * math.pi), abs=1e-14)
    assert gd(1e-9 + 0j, eta) == pytest.approx(gd(0j, eta), abs=1e-8)


def test_green_domain_errors():
    gd = DiskGreen(R)
    with pytest.raises(DomainError):
        gd(0.5, 0.5)
    with pytest.raises(DomainError):
        gd(0.5, 3.5)
    with pytest.raises(ValidationError):
        DiskGreen(-1.0)


def test_bump_laplacian_against_stencil():
    b = Bump(0.3 + 0.2j, 1.1, 4)
    z = np.array([0.5 + 0.1j, 0.0 + 0.6j, 1.0 + 0.4j])
    assert np.allclose(b.laplacian(z), laplacian(b, z, 1e-3), rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("bump", [Bump(0.6 + 0.3j, 0.9, 3), Bump(-0.9 + 0.6j, 1.5, 4), Bump(0.3j, 2.4, 6)])
def test_delta_reproduction(bump):
    gd = DiskGreen(R)
    for y in (bump.center, bump.center + 0.4 * bump.rho, bump.center + 0.9j * bump.rho, 2.5 + 0j):
        if abs(y) >= R:
            continue
        value, expect = delta_reproduction(gd, y, bump)
        assert abs(value - expect) <= 1e-6


def test_model_integral_is_2pi():
    d, q = np.array([0.7, -0.2]), np.array([0.1, 0.5])
    a, b = np.array([1.0, 0.3]), np.array([-0.4, 2.0])
    for r in (1.0, 10.0, 1e3):
        val = boundary_integral(model_field(d, q), a, b, r, 2)
        assert val == pytest.approx(2 * math.pi * (a @ d + b @ q), rel=1e-9)


def test_zero_gradient_gives_zero(n2_aniso):
    ke = KernelElement(n2_aniso, ("alpha", 2))
    lhs, rhs = ibp_check(n2_aniso, ke, [PolyField(c=1.0, xx=2.0), PolyField(yy=-1.0)])
    assert lhs == 0.0 and abs(rhs) <= 1e-9


@pytest.mark.parametrize("fixture", ["liouville", "n2_aniso", "n3_mixed"])
def test_ibp_two_routes(fixture, request):
    sol = request.getfixturevalue(fixture)
    hbar = [PolyField(x=1.0, y=0.5, xx=0.3)] + [PolyField(x=0.2 * i, y=-0.1) for i in range(1, sol.n)]
    for p in kernel_parameters(sol.cd) + [("lambda", 1)]:
        lhs, rhs = ibp_check(sol, KernelElement(sol, p), hbar)
        assert abs(lhs - rhs) <= max(1e-5, 1e-3 * abs(lhs)), p


@pytest.mark.parametrize("fixture", ["n2_aniso", "n3_mixed"])
def test_cross_response_suppressed(fixture, request):
    sol = request.getfixturevalue(fixture)
    for p in kernel_parameters(sol.cd):
        diag, cross, table = cross_response(sol, KernelElement(sol, p), 1e3)
        assert cross <= 1e-4 * abs(diag)
        assert len(table) == 2 * sol.n


def test_boundary_constant_measured(n2_aniso):
    ke = KernelElement(n2_aniso, ("alpha", 2))
    fit = fit_boundary_constant(n2_aniso, ke)
    # the brute-force constant; pi would be off by a factor two
    assert abs(fit["K_minus_2pi"]) <= 1e-3
    assert abs(fit["K_minus_pi"]) > 3.0
    res = orthogonality_integral(n2_aniso, ke, (np.array([1.0, 0.0]), np.zeros(2)), 1e3)  # alpha_2 -> slot a_1
    assert res.value == pytest.approx(res.prediction_2pi, rel=1e-3)
    assert res.prediction_pi == pytest.approx(res.prediction_2pi / 2)

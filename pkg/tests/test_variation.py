import math

import numpy as np
import pytest

from conftest import solution
from todalab.errors import ConfigError, ValidationError
from todalab.variation import (
    KernelElement,
    decay_profile,
    expected_first_mode,
    kernel_parameters,
    linearized_residual,
    parameter_derivative,
)

rng = np.random.default_rng(99)
Z = np.exp(rng.uniform(math.log(0.5), math.log(5), 30)) * np.exp(1j * rng.uniform(-3, 3, 30))

LAM1, C = 1.25, 0.3 - 0.2j


@pytest.fixture
def liou():
    return solution(1, [0], lam=[0.2, LAM1], c={(1, 0): C})


def _closed_form(kind, z):
    # f = lam0 + lam1 |z + c|^2 with lam0 lam1 = 1/4;  phi = -dU^1/dp = (df/dp) / f
    lam0 = 0.25 / LAM1
    w = z + C
    f = lam0 + LAM1 * np.abs(w) ** 2
    df = {
        "lambda": np.abs(w) ** 2 - lam0 / LAM1,
        "loglambda": LAM1 * np.abs(w) ** 2 - lam0,
        "alpha": 2 * LAM1 * w.real,
        "beta": 2 * LAM1 * w.imag,
    }[kind]
    return df / f


@pytest.mark.parametrize("kind", ["lambda", "loglambda", "alpha", "beta"])
def test_liouville_kernel_closed_form(liou, kind):
    ke = KernelElement(liou, (kind, 1))
    got = ke.upper(Z)[0]
    ref = _closed_form(kind, Z)
    assert np.max(np.abs(got - ref)) <= 1e-9 * np.max(np.abs(ref))
    assert np.max(linearized_residual(liou, ke, Z)) <= 1e-5


def test_kernel_parameters_follow_I2():
    sol = solution(3, ["1/2", 0, 1])
    assert kernel_parameters(sol.cd) == [("alpha", 2), ("beta", 2)]


@pytest.mark.parametrize("fixture", ["n2_aniso", "n3_mixed"])
@pytest.mark.parametrize("precision", ["double", "extended"])
def test_linearized_residual_and_negative_control(fixture, precision, request):
    sol = request.getfixturevalue(fixture)
    step, h = (1e-3, 1e-2) if precision == "double" else (1e-4, 1e-3)
    params = kernel_parameters(sol.cd) + [("lambda", k) for k in range(1, sol.n + 1)]
    z = Z[:6] if precision == "extended" else Z
    for p in params:
        ke = KernelElement(sol, p, step)
        clean = np.max(linearized_residual(sol, ke, z, h, precision))
        bad = np.max(linearized_residual(sol, ke.corrupted(), z, h, precision))
        assert clean <= 1e-5, p
        assert bad >= 1e3 * clean, p


@pytest.mark.parametrize("fixture", ["liouville", "n2_aniso", "n3_mixed"])
def test_ring_mode_structure(fixture, request):
    sol = request.getfixturevalue(fixture)
    r = 1e3
    for p in kernel_parameters(sol.cd):
        ke = KernelElement(sol, p)
        m, amp, mode = expected_first_mode(sol, ke)
        prof = decay_profile(ke, radii=[r])
        own = prof.cos_amp if mode == "cos" else prof.sin_amp
        other = prof.sin_amp if mode == "cos" else prof.cos_amp
        assert abs(own[m - 1, 0] * r / amp - 1) <= 0.02
        for l in range(sol.n):
            if l != m - 1:
                assert abs(own[l, 0] * r) <= 1e-3 * abs(amp)
        assert np.max(np.abs(other[:, 0])) * r <= 1e-6 * abs(amp)


def test_other_components_decay_faster(n3_mixed):
    for p in kernel_parameters(n3_mixed.cd):
        ke = KernelElement(n3_mixed, p)
        m = expected_first_mode(n3_mixed, ke)[0]
        prof = decay_profile(ke)
        assert prof.decay_exponent(m) == pytest.approx(1.0, abs=0.05)
        for l in range(1, n3_mixed.n + 1):
            if l != m:
                assert prof.decay_exponent(l) >= 1.9


def test_decay_profile_csv(liouville):
    prof = decay_profile(KernelElement(liouville, ("alpha", 1)), radii=[100.0, 1000.0], angles=16)
    lines = prof.to_csv().splitlines()
    assert lines[0] == "radius,component,mode,amplitude" and len(lines) == 1 + 2 * 2


def test_element_validation(liouville):
    with pytest.raises(ValidationError):
        KernelElement(liouville, ("gamma", 1))
    with pytest.raises(ValidationError):
        KernelElement(liouville, ("lambda", 2))
    with pytest.raises(ConfigError):
        KernelElement(liouville, ("alpha", 1), step=1e-9)
    with pytest.raises(ValidationError):
        KernelElement(solution(2, ["1/2", 0]), ("alpha", 1))
    tiny = solution(1, [0], lam=[1e3, 2.5e-4])
    with pytest.raises(ValidationError):
        KernelElement(tiny, ("lambda", 1), step=1.5).perturbed(-1.0)
    assert parameter_derivative(liouville, ("beta", 1)).name == "beta_1"

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from todalab import TodaSolution, build_cartan, make_params, validate_params

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def solution(n, gamma, lam=None, c=None, cut_angle=np.pi):
    cd = build_cartan(n, gamma)
    if lam is None:
        from todalab.solution import lambda_product_target
        lam = [lambda_product_target(cd) ** (1.0 / (n + 1))] * (n + 1)
    params = validate_params(cd, make_params(n, lam, c or {}), autonormalize=True)
    return TodaSolution(cd, params, cut_angle)


@pytest.fixture
def liouville():
    return solution(1, [0])


@pytest.fixture
def n2_example():
    return solution(2, [1, 0])


@pytest.fixture
def n2_aniso():
    return solution(2, [1, 0], lam=[0.03, 0.05, 0.0868], c={(2, 1): 0.3 - 0.2j, (1, 0): 0.5 + 0.1j})


@pytest.fixture
def n3_mixed():
    return solution(3, ["1/2", 0, 0], lam=[1.0, 0.8, 1.2, 1.0],
                    c={(2, 1): 0.2 + 0.1j, (3, 2): -0.1 + 0.25j})

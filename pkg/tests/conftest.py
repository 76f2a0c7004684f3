import pytest

from ruinprob import ModelParams, solve


@pytest.fixture(scope="session")
def base():
    return ModelParams()


@pytest.fixture(scope="session")
def unres(base):
    return solve(base, restricted=False)


@pytest.fixture(scope="session")
def high(base):
    return solve(base, restricted=True)


@pytest.fixture(scope="session")
def low(base):
    return solve(base.with_p(0.1), restricted=True)


@pytest.fixture(scope="session", params=["unrestricted", "restricted-high", "restricted-low"])
def any_solution(request, unres, high, low):
    return {"unrestricted": unres, "restricted-high": high, "restricted-low": low}[request.param]

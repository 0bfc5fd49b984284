import math

import pytest
from hypothesis import HealthCheck, settings

from warpforge.constructions import (build_block, build_connector, build_model_I, build_model_II,
                                     build_multi_telescope, build_telescope)
from warpforge.profiles import Constant, Linear, single
from warpforge.specs import TripleWarpSpec

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def flat_spec(m=2, n=2):
    return TripleWarpSpec(m, n, single(Linear(1.0, 0.0), "phi"), single(Constant(1.0), "psi"),
                          single(Constant(1.0), "rho"))


@pytest.fixture(scope="session")
def model1():
    return build_model_I(2, 2, 0.01)


@pytest.fixture(scope="session")
def model2():
    return build_model_II(2, 2, 0.01, lam=1.0)


@pytest.fixture(scope="session")
def block():
    return build_block(2, 2, 0.01, 10.0)


@pytest.fixture(scope="session")
def connector():
    return build_connector(2, 3, 0.01, 10.0)


@pytest.fixture(scope="session")
def telescope():
    return TELESCOPE_CACHE()


@pytest.fixture(scope="session")
def multi_telescope():
    return build_multi_telescope([3, 2], 2)


@pytest.fixture
def flat():
    return flat_spec()


LN10 = math.log(10.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


_telescope_cache = []


def TELESCOPE_CACHE():
    """The 3-stage (3, 2) telescope, built once for hypothesis tests that cannot take fixtures."""
    if not _telescope_cache:
        _telescope_cache.append(build_telescope(3, 2, 3))
    return _telescope_cache[0]

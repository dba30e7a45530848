import sys

import numpy as np
import pytest
from hypothesis import settings

from smallimpact import presets

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ou():
    """(params, model, solution) of the ou-myopic preset on a moderate grid."""
    return presets.build("ou-myopic", n_y=201, n_t=100)


@pytest.fixture(scope="session")
def ou_rho():
    """Correlated variant, exercising the hedging-demand term."""
    return presets.build("ou-myopic", rho=0.6, n_y=201, n_t=100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, d, cond=10.0):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    w = np.exp(rng.uniform(0, np.log(cond), d))
    return (q * w) @ q.T


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from finslerlab import MetricSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EUCLIDEAN = MetricSpec.euclidean()
SPHERE = MetricSpec.sphere()
RANDERS = MetricSpec.randers(0.2, 0.0)
PNORM4 = MetricSpec.pnorm(4.0)
# non-constant members used where x-dependence matters
CONFORMAL = MetricSpec.conformal(c00=0.1, c10=0.2, c01=-0.3, c20=0.15, c11=0.05, c02=-0.1)
RANDERS_VAR = MetricSpec.randers(0.2, 0.1, b1_x2=0.3, b2_x1=-0.2)

FAMILIES = {"euclidean": EUCLIDEAN, "sphere": SPHERE, "conformal": CONFORMAL,
            "randers": RANDERS, "randers-var": RANDERS_VAR, "pnorm4": PNORM4}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_direction(rng, n=None, avoid_axes=True):
    """Unit Euclidean directions whose components stay away from zero."""
    size = () if n is None else (n,)
    while True:
        th = rng.uniform(0, 2 * np.pi, size=size)
        d = np.stack([np.cos(th), np.sin(th)], axis=-1)
        if not avoid_axes or np.all(np.abs(d) > 0.05):
            return d


# -- acceptance summary -----------------------------------------------------------------

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    if rep.when == "setup" and not rep.passed:
        _ACCEPTANCE[n] = ("ERROR", detail)
    elif rep.when == "call":
        _ACCEPTANCE[n] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}".rstrip())

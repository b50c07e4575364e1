import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gramlax import duality
from gramlax.search import welch_bound

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# Every OffCertificate built anywhere in the session is recorded so the
# Welch lower bound can be checked across the whole suite.
ISSUED: list = []
_original_post_init = duality.OffCertificate.__post_init__


def _recording_post_init(self):
    _original_post_init(self)
    ISSUED.append(self)


duality.OffCertificate.__post_init__ = _recording_post_init


def welch_violations(certs, slack: float = 1e-9) -> list:
    """Certificates that verify but beat the Welch bound."""
    bad = []
    for c in certs:
        if not (c.n > c.d >= 1):
            continue
        if not duality.verify_off_certificate(c).passed:
            continue
        if c.eps < welch_bound(c.n, c.d) - slack:
            bad.append(c)
    return bad


def pytest_sessionfinish(session, exitstatus):
    bad = welch_violations(ISSUED)
    if bad:
        lines = [f"n={c.n} d={c.d} eps={c.eps!r} welch={welch_bound(c.n, c.d)!r}" for c in bad[:10]]
        print("\nWelch lower bound violated by issued certificates:\n  " + "\n  ".join(lines))
        session.exitstatus = 1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def issued_certificates():
    return ISSUED


# Acceptance criteria report one line each at the end of the run.
ACCEPTANCE: list[str] = []
WELCH_CRITERION = "test_criterion_5_welch_lower_bound"


def pytest_collection_modifyitems(session, config, items):
    # the Welch criterion inspects certificates issued by every other test, so it goes last
    last = [it for it in items if it.name == WELCH_CRITERION]
    items[:] = [it for it in items if it.name != WELCH_CRITERION] + last


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

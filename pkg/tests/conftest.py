import os
import random

import pytest
from hypothesis import HealthCheck, settings

SEED = int(os.environ.get("MANDATE_SEED", "0"))

settings.register_profile(
    "seeded", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("seeded")


def pytest_report_header(config):
    return "MANDATE_SEED=%d" % SEED


@pytest.fixture
def rng():
    return random.Random(SEED)


# acceptance criteria report: number -> (passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line("AC%-2d %s  %s%s" % (n, "PASS" if ok else "FAIL", title,
                                                        " (%s)" % detail if detail else ""))

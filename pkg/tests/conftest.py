import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qdres",
    max_examples=int(os.environ.get("QDRES_HYPOTHESIS_EXAMPLES", "25")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qdres")


@pytest.fixture(scope="session")
def bound_params():
    from qdres.hamiltonian import ModelParams

    return ModelParams(v0=5.0, beta=3.0, l_perp=0.3)


# acceptance verdicts, printed at the end of the run (see test_acceptance.py)
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from decaylab.spectral_core import Field, Grid

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def grid4096():
    return Grid(4096, 40.0)


@pytest.fixture(scope="session")
def gaussian(grid4096):
    return Field.from_function(grid4096, lambda x: np.exp(-x ** 2))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 13):
        ok, detail = mod.RESULTS.get(n, (None, "not run"))
        status = "PASS" if ok else ("FAIL" if ok is False else "----")
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from gbcodes import codes

# numba compiles on first call, so per-example timing is meaningless
settings.register_profile("gbcodes", deadline=None)
settings.load_profile("gbcodes")

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, detail = results[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, ok, detail)`` for the end-of-run summary."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def record(num: int, ok: bool, detail: str) -> bool:
        store[num] = (bool(ok), detail)
        return bool(ok)

    return record


@pytest.fixture(scope="session")
def gb15():
    return codes.code_from_spec("GB15")


@pytest.fixture(scope="session")
def gb31():
    return codes.code_from_spec("GB31")


@pytest.fixture(scope="session")
def gb63():
    return codes.code_from_spec("GB63")


@pytest.fixture(scope="session")
def toy():
    """[[4,2,2]] code from a = b = 1 + x over C_2."""
    g = codes.GroupSpec(2)
    one_x = codes.BinPoly.from_exponents([0, 1])
    return codes.build_css(g, one_x, one_x, name="toy")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

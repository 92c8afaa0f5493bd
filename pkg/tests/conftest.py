import math
from contextlib import contextmanager

import pytest

from billiard_forge.construction import derive_blueprint
from billiard_forge.gamma import build_table, synthesize, tau0_window_convex

# criterion number -> (passed, label); filled by tests/test_acceptance.py
ACCEPTANCE = {}


N_CRITERIA = 11


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        if k in ACCEPTANCE:
            ok, label = ACCEPTANCE[k]
            terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {label}")
        else:
            terminalreporter.write_line(f"criterion {k:2d}: NOT RUN")


@pytest.fixture(scope="session")
def criterion():
    """Context manager recording whether the enclosed checks of a criterion passed."""

    @contextmanager
    def record(k, label):
        ok = False
        try:
            yield
            ok = True
        finally:
            prev = ACCEPTANCE.get(k, (True, label))[0]
            ACCEPTANCE[k] = (prev and ok, label)

    return record


@pytest.fixture(scope="session")
def bp4():
    """N = 4, r = 1, eps = 0.01, tau0 = 0.5."""
    return derive_blueprint(4, 1.0, 0.01, 0.5)


@pytest.fixture(scope="session")
def bp4c():
    lo, hi = tau0_window_convex(4, 1.0, 0.01)
    return derive_blueprint(4, 1.0, 0.01, 0.5 * (lo + hi))


@pytest.fixture(scope="session")
def gamma_a(bp4):
    return synthesize(bp4, "a")


@pytest.fixture(scope="session")
def gamma_b(bp4):
    return synthesize(bp4, "b")


@pytest.fixture(scope="session")
def gamma_c(bp4c):
    return synthesize(bp4c, "c")


@pytest.fixture(scope="session")
def table_a(gamma_a, bp4):
    return build_table(gamma_a, bp4)


@pytest.fixture(scope="session")
def table_b(gamma_b, bp4):
    return build_table(gamma_b, bp4)


@pytest.fixture(scope="session")
def table_c(gamma_c, bp4c):
    return build_table(gamma_c, bp4c)


@pytest.fixture(scope="session")
def table_flat_contact(bp4):
    """Variant a with a straight contact (k0 = 0): hyperbolic."""
    gp = synthesize(bp4, "a", k0=0.0, require_elliptic=False)
    return build_table(gp, bp4)


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


TWO_PI = 2 * math.pi

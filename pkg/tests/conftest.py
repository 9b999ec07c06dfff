from __future__ import annotations

import pytest

from fixture_graphs import NAMES, build


@pytest.fixture(params=NAMES)
def fx(request):
    return build(request.param)


@pytest.fixture
def dihedral():
    return build("dihedral")


@pytest.fixture
def edge():
    return build("edge")


@pytest.fixture
def path_z2():
    return build("path_z2")


@pytest.fixture
def path_z():
    return build("path_z")


@pytest.fixture
def triangle_z3():
    return build("triangle_z3")


# -- acceptance report ------------------------------------------------------------

ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores one criterion outcome for the final report."""
    def record(n: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

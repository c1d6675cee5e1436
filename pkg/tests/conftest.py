import numpy as np
import pytest

from skycache.core import Preference, Relation
from skycache.data import GenSpec, generate

_CRITERIA: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    """Remember an acceptance outcome for the end-of-run summary."""
    _CRITERIA[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def random_relation(rng, n, d, prefs=True):
    values = rng.random((n, d))
    if prefs:
        p = [Preference.MIN if x else Preference.MAX for x in rng.integers(0, 2, d)]
    else:
        p = ()
    return Relation(values, tuple(p))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def four_points():
    return Relation([(1, 9), (9, 1), (5, 5), (6, 6)])


@pytest.fixture(scope="session")
def wide_relation():
    # attribute ids 1..9 as in the insertion walkthrough
    return generate(GenSpec(1000, 10, seed=7))

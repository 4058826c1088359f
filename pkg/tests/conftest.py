import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from helpers import KERNELS, VISITS  # noqa: E402

from dbstexc import cluster  # noqa: E402
from dbstexc.model import InvariantViolation  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(autouse=True, scope="session")
def _visit_once_guard():
    """Every DBSTexC / F-DBSTexC run in the suite must range-query each relevant point once."""
    original = cluster._run

    def guarded(dataset, backend, *args, **kwargs):
        out = original(dataset, backend, *args, **kwargs)
        n = len(backend.relevant_xy)
        VISITS["runs"] += 1
        if out[-1] != n:
            VISITS["violations"].append((n, out[-1]))
            raise InvariantViolation(f"{out[-1]} range queries for n={n}")
        return out

    cluster._run = guarded
    yield
    cluster._run = original


@pytest.fixture(params=sorted(KERNELS))
def kernels(request):
    return KERNELS[request.param]


@pytest.fixture(params=["linear", "kd"])
def kind(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


class Criterion:
    def __init__(self, name):
        self.name = name
        self.recorded = False

    def verdict(self, ok, detail=""):
        from helpers import VERDICTS

        self.recorded = True
        VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {self.name}: {detail}")
        assert ok, f"{self.name}: {detail}"


@pytest.fixture
def criterion(request):
    c = Criterion(request.node.function.__doc__.strip().splitlines()[0])
    yield c
    if not c.recorded:
        from helpers import VERDICTS

        VERDICTS.append(f"FAIL  {c.name}: raised before a verdict was reached")


def pytest_terminal_summary(terminalreporter):
    from helpers import VERDICTS

    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in VERDICTS:
        terminalreporter.write_line(line)
    bad = VISITS["violations"]
    terminalreporter.write_line(
        f"{'PASS' if not bad else 'FAIL'}  9 (suite-wide) visit-once: {VISITS['runs']} DBSTexC/F-DBSTexC runs "
        f"checked, {len(bad)} with a query count different from n"
    )

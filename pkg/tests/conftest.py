import time
from collections import defaultdict

import numpy as np
import pytest

from flatwood.flatgen import PipelineConfig, run_pipeline
from flatwood.trigcore import TrigPoly


TIMINGS: dict = {}
ACCEPTANCE: dict = defaultdict(list)


def record(criterion: int, ok: bool, detail: str) -> None:
    """Collect one acceptance outcome; parts of a criterion are ANDed in the summary."""
    ACCEPTANCE[criterion].append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {k:2d}: {status} | " + "; ".join(d for _, d in parts))


@pytest.fixture(scope="session")
def desk_run():
    """The reference desk configuration, built once per session."""
    start = time.perf_counter()
    run = run_pipeline(PipelineConfig(n=10240, seed=7))
    TIMINGS["desk_run"] = time.perf_counter() - start
    return run


@pytest.fixture(scope="session")
def small_run():
    return run_pipeline(PipelineConfig(n=1160, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_poly(rng, degree, scale=1.0):
    return TrigPoly(rng.standard_normal(degree + 1) * scale, rng.standard_normal(degree) * scale)

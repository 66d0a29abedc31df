import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from artifact.he import SchemeParams, SimulatorContext

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def sim_context(ring_dimension=16, mult_depth=1, ciphertext_bytes=1024, rotation_steps=None, seed=0):
    return SimulatorContext(SchemeParams(ring_dimension, mult_depth, ciphertext_bytes), seed=seed,
                            rotation_steps=rotation_steps)


@pytest.fixture
def sim():
    ctx = sim_context()
    return ctx, ctx.evaluator()


@pytest.fixture(scope="session")
def ckks():
    from artifact.he.ckks import CkksContext, ToyParams

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ctx = CkksContext(ToyParams(4096, 1), rotation_steps=range(1, 64), seed=3)
    return ctx, ctx.evaluator()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# (criterion, ok, detail) lines from tests/test_acceptance.py
ACCEPTANCE = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from towertopk.hashing import FlowId

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

flow_ids = st.builds(
    FlowId,
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**16 - 1),
    st.integers(0, 2**16 - 1),
    st.integers(0, 255),
)


def random_flow(rng: random.Random) -> FlowId:
    return FlowId(rng.getrandbits(32), rng.getrandbits(32), rng.getrandbits(16), rng.getrandbits(16), rng.choice([6, 17]))


@pytest.fixture
def rng():
    return random.Random(1234)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict():
    def record(n: int, name: str, ok: bool | None, detail: str = "") -> bool:
        status = {True: "PASS", False: "FAIL", None: "INFO"}[ok]
        ACCEPTANCE[n] = f"[{status}] {n}. {name}" + (f": {detail}" if detail else "")
        return bool(ok) or ok is None
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])

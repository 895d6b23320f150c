import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from icsec.channel import ChannelMatrix

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def diag_dominant(seed: int, K: int = 4) -> ChannelMatrix:
    """Diagonal gains U(1, 1.5), cross gains U(0.2, 0.6)."""
    rng = np.random.default_rng(seed)
    g = rng.uniform(0.2, 0.6, size=(K, K))
    g[np.diag_indices(K)] = rng.uniform(1.0, 1.5, size=K)
    return ChannelMatrix(g, seed=seed, spec="diag-dominant")


@pytest.fixture
def H4():
    from icsec.channel import sample_channel
    return sample_channel(4, "uniform(0.5,1.5)", 3)


ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

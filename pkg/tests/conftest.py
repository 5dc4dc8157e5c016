import numpy as np
import pytest
from hypothesis import settings

from fedclus import surrogate
from fedclus.dataio import Dataset

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(criterion: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def surrogate_csv(tmp_path_factory):
    return surrogate.write_csv(tmp_path_factory.mktemp("data") / "cardio_surrogate.csv")


def make_dataset(features, labels, names=None) -> Dataset:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    names = names or tuple(f"x{j}" for j in range(features.shape[1]))
    return Dataset(features, np.asarray(labels), tuple(names))

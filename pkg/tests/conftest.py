import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mpcafd.config import GlobalConfig  # noqa: E402
from mpcafd.dataset_io import TimeSeriesDataset  # noqa: E402
from mpcafd.faultlab import generate_plant, load_plant_config  # noqa: E402
from mpcafd.pipeline import train_bank  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(values, meta=None, start=1_570_000_000, step=60, names=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n, m = values.shape
    return TimeSeriesDataset(
        timestamps=start + step * np.arange(n, dtype=np.int64),
        variable_names=names or [f"x{j}" for j in range(m)],
        values=values,
        meta=meta or {},
    )


@pytest.fixture(scope="session")
def replica():
    return load_plant_config("replica_3mode")


@pytest.fixture(scope="session")
def replica_train(replica):
    return generate_plant(replica, "train")


@pytest.fixture(scope="session")
def multi_bank(replica_train):
    bank, _ = train_bank(replica_train, GlobalConfig())
    return bank


@pytest.fixture(scope="session")
def single_bank(replica_train):
    bank, _ = train_bank(replica_train, GlobalConfig(), k_override=1)
    return bank


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

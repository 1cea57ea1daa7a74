import numpy as np
import pytest

from pathlib import Path

from ess_sense import Dataset

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"


@pytest.fixture(scope="session")
def tictac_path() -> Path:
    return DATA_DIR / "tictactoe.csv"


@pytest.fixture(scope="session")
def balance_path() -> Path:
    return DATA_DIR / "balance.csv"


def random_dataset(rng, n_vars=None, n_records=None, max_arity=3) -> Dataset:
    """Small random dataset for oracle comparisons."""
    if n_vars is None:
        n_vars = int(rng.integers(2, 5))
    if n_records is None:
        n_records = int(rng.integers(2, 41))
    arities = [int(rng.integers(2, max_arity + 1)) for _ in range(n_vars)]
    records = np.stack(
        [rng.integers(0, a, size=n_records) for a in arities], axis=1
    )
    return Dataset.from_records(records, arities)

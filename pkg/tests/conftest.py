import numpy as np
import pytest

from sumboost.dataset import CONTINUOUS, DISCRETE, ColumnSpec, TabularDataset
from sumboost.llm import LLMClient, MockProvider
from sumboost.synth import make_synthetic


def synthetic_dataset(n=100, k=2, flip=0.3, seed=0):
    """In-memory synthetic dataset plus its oracle."""
    _, rows, meta, oracle = make_synthetic(n, k, flip=flip, seed=seed)
    schema = (ColumnSpec("group", DISCRETE), ColumnSpec("age", CONTINUOUS),
              ColumnSpec("income", CONTINUOUS), ColumnSpec("outcome", DISCRETE))
    records = tuple({"group": r[0], "age": float(r[1]), "income": float(r[2]), "outcome": r[3]} for r in rows)
    ds = TabularDataset(schema, records, "outcome", tuple(meta["classes"]), meta["metadata_text"], "synthetic")
    return ds, oracle


def mock_client(oracle, **kw):
    return LLMClient(MockProvider(oracle), **kw)


@pytest.fixture
def synth():
    return synthetic_dataset()


@pytest.fixture
def rng():
    return np.random.default_rng(0)

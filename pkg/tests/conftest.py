from pathlib import Path

import numpy as np
import pytest

from ivkit import BinaryIVTable, Dataset, expand_table, flu_table

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def flu():
    return flu_table()


@pytest.fixture(scope="session")
def flu_dataset(flu):
    return expand_table(flu)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_iv_dataset(
    rng,
    n=120,
    k=1,
    n_cov=0,
    beta1=1.5,
    strength=0.8,
    endogeneity=0.5,
):
    """A just- or over-identified linear IV sample with endogenous x."""
    z = rng.standard_normal((n, k))
    v = rng.standard_normal((n, n_cov)) if n_cov else None
    e = rng.standard_normal(n)
    first_stage_error = endogeneity * e + np.sqrt(1 - endogeneity**2) * rng.standard_normal(n)
    x = z.sum(axis=1) * strength + first_stage_error
    y = 0.4 + beta1 * x + e
    if v is not None:
        y = y + v @ np.full(n_cov, 0.3)
    return Dataset(outcome=y, treatment=x, instruments=z, covariates=v)


def random_table(rng, max_count=40) -> BinaryIVTable:
    """A random non-degenerate 2x2x2 count table."""
    while True:
        counts = rng.integers(0, max_count, size=(2, 2, 2))
        if counts[:, :, 0].sum() >= 1 and counts[:, :, 1].sum() >= 1:
            return BinaryIVTable(counts)

import numpy as np
import pytest

from abcgof import ObservedStats, ReferenceTable


def make_table(stats, params=None, stat_names=None, param_names=None) -> ReferenceTable:
    """Build a small in-memory table; params default to a row counter.

    Flat inputs are treated as single columns.
    """
    stats = np.asarray(stats, dtype=float)
    if stats.ndim == 1:
        stats = stats[:, None]
    n, k = stats.shape
    if params is None:
        params = np.arange(n, dtype=float)
    params = np.asarray(params, dtype=float)
    if params.ndim == 1:
        params = params[:, None]
    return ReferenceTable(
        param_names=param_names or [f"p{j}" for j in range(params.shape[1])],
        stat_names=stat_names or [f"s{j}" for j in range(k)],
        params=params,
        stats=stats,
    )


def make_observed(table: ReferenceTable, values) -> ObservedStats:
    return ObservedStats(stat_names=table.stat_names, values=np.asarray(values, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)

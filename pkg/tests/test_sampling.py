import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussblab.sampling import Accumulator, accumulate, derive_seed, partition_sizes


@given(st.integers(0, 10**7), st.integers(1, 64))
def test_partition_sizes_sum(samples, parts):
    sizes = partition_sizes(samples, parts)
    assert sum(sizes) == samples and max(sizes) - min(sizes) <= 1


def test_derive_seed_is_deterministic_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert len({derive_seed(7, k) for k in range(100)}) == 100
    assert 0 <= derive_seed(2**64 - 1, 3) < 2**63


@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.integers(0, 2**32))
def test_accumulator_merge_matches_batch(chunks, seed):
    rng = np.random.default_rng(seed)
    data = [rng.standard_normal((m, 3)) for m in chunks]
    acc = Accumulator(3)
    for F in data:
        acc.merge(Accumulator(3).add(F))
    allF = np.vstack(data)
    assert acc.count == len(allF)
    np.testing.assert_allclose(acc.mean, allF.mean(axis=0), atol=1e-12)
    if len(allF) > 1:
        np.testing.assert_allclose(acc.cov, np.cov(allF.T), atol=1e-10)


def test_masked_rows_counted_as_seen():
    acc = Accumulator(1).add(np.arange(10.0), np.arange(10) % 2 == 0)
    assert acc.seen == 10 and acc.count == 5
    assert acc.mean[0] == pytest.approx(4.0)


def test_delta_se_is_linear_combination():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((500, 2))
    acc = Accumulator(2).add(F)
    g = np.array([1.0, -2.0])
    assert acc.delta_se(g) == pytest.approx(np.std(F @ g, ddof=1) / np.sqrt(500), rel=1e-10)


def _feat(Z):
    return [(Z[:, :1] ** 2, None, True)]


def test_accumulate_reproducible_and_partition_dependent():
    a = accumulate(_feat, 2, 11, 200_000, partition_count=3)[0]
    b = accumulate(_feat, 2, 11, 200_000, partition_count=3, workers=3)[0]
    assert a.mean[0] == b.mean[0] and a.count == 200_000
    c = accumulate(_feat, 2, 11, 200_000, partition_count=1)[0]
    assert c.mean[0] != a.mean[0]
    assert abs(c.mean[0] - 1.0) < 5 * c.sem[0]

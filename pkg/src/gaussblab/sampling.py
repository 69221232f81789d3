"""Seeded Gaussian sample streams and streaming moment accumulators.

Samples come from Philox generators (counter based) keyed by
``SeedSequence(seed).spawn(partition_count)``. Each partition is consumed in
fixed-size chunks and reduced to an :class:`Accumulator`; partition results
are merged in partition order, so running partitions on worker threads gives
bit-identical output to the sequential loop for the same ``partition_count``.

Every estimator in the package is a smooth function of feature means over
one such stream. Using a single stream for several bodies is what makes
ratios such as the B-deficit resolvable (common random numbers).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

CHUNK = 1 << 16


def partition_sizes(samples: int, partition_count: int) -> list[int]:
    base, extra = divmod(int(samples), int(partition_count))
    return [base + (1 if k < extra else 0) for k in range(partition_count)]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for a task identified by ``keys``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def partition_generators(seed: int, partition_count: int = 1):
    children = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(partition_count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def gaussian_chunks(rng: np.random.Generator, size: int, dim: int):
    left = int(size)
    while left > 0:
        m = min(CHUNK, left)
        yield rng.standard_normal((m, dim))
        left -= m


class Accumulator:
    """Running mean and covariance of a feature vector (Chan's parallel update).

    Rows may be masked, in which case the statistics are over the accepted
    rows only and ``seen`` keeps the total number of rows offered.
    """

    def __init__(self, k: int, full: bool = True):
        self.k = k
        self.full = full
        self.count = 0
        self.seen = 0
        self.mean = np.zeros(k)
        self.m2 = np.zeros((k, k)) if full else np.zeros(k)

    def add(self, F, mask=None):
        F = np.asarray(F, dtype=float).reshape(len(F), self.k)
        self.seen += len(F)
        if mask is not None:
            F = F[mask]
        m = len(F)
        if m == 0:
            return self
        mu = F.mean(axis=0)
        C = F - mu
        m2 = C.T @ C if self.full else np.einsum("ij,ij->j", C, C)
        self._combine(m, mu, m2)
        return self

    def _combine(self, m, mu, m2):
        n = self.count
        tot = n + m
        d = mu - self.mean
        if self.full:
            corr = np.outer(d, d) * (n * m / tot)
        else:
            corr = d * d * (n * m / tot)
        self.m2 = self.m2 + m2 + corr
        self.mean = self.mean + d * (m / tot)
        self.count = tot

    def merge(self, other: "Accumulator"):
        self.seen += other.seen
        if other.count:
            self._combine(other.count, other.mean, other.m2)
        return self

    @property
    def cov(self):
        if self.count < 2:
            return np.full_like(self.m2, np.nan)
        return self.m2 / (self.count - 1)

    @property
    def var(self):
        c = self.cov
        return np.diag(c).copy() if self.full else c

    @property
    def sem(self):
        """Standard error of each mean."""
        return np.sqrt(np.maximum(self.var, 0.0) / max(self.count, 1))

    def delta_se(self, grad) -> float:
        """Delta-method standard error of ``f(mean)`` given ``grad f`` at the mean."""
        g = np.asarray(grad, dtype=float)
        if self.count < 2:
            return float("nan")
        v = g @ self.cov @ g if self.full else np.sum(g * g * self.cov)
        return float(np.sqrt(max(v, 0.0) / self.count))


Featurizer = Callable[[np.ndarray], Sequence[tuple]]


def accumulate(featurize: Featurizer, dim: int, seed: int, samples: int,
               partition_count: int = 1, workers: int = 1) -> list[Accumulator]:
    """Reduce a Gaussian stream through ``featurize``.

    ``featurize(Z)`` receives an ``(m, dim)`` chunk and returns a sequence of
    ``(features, mask, full)`` triples (``mask`` may be ``None``); one
    accumulator is produced per triple, in order.
    """
    gens = partition_generators(seed, partition_count)
    sizes = partition_sizes(samples, partition_count)

    def run(k):
        accs = None
        for Z in gaussian_chunks(gens[k], sizes[k], dim):
            out = featurize(Z)
            if accs is None:
                accs = [Accumulator(np.asarray(F).reshape(len(Z), -1).shape[1], full)
                        for F, _, full in out]
            for acc, (F, mask, _) in zip(accs, out):
                acc.add(np.asarray(F).reshape(len(Z), -1), mask)
        return accs

    if workers > 1 and partition_count > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(partition_count)))
    else:
        parts = [run(k) for k in range(partition_count)]
    parts = [p for p in parts if p is not None]
    total = parts[0]
    for p in parts[1:]:
        for a, b in zip(total, p):
            a.merge(b)
    return total

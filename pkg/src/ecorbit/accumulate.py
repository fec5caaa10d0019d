"""Mergeable accumulators fed by the orbit scanner.

Every accumulator supports ``spawn`` (empty copy with the same settings),
``update`` (consume one :class:`OrbitBatch`), ``merge`` and ``result``.
Integer state merges by addition; real-valued sums are kept exactly as
dyadic rationals, so a scan split into any number of ranges gives the same
answer bit for bit.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np

COORDS = ("x", "y", "X", "Y", "s")


@dataclass
class OrbitBatch:
    """A block of consecutive multiples n with their coordinates.

    ``s`` is the signed fractional part of n*t in [-1/2, 1/2); ``half`` marks
    the bounded row.  X, Y are canonical, x, y in the curve's input form.
    """

    n: np.ndarray
    s: np.ndarray
    half: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.n)

    def coord(self, name: str) -> np.ndarray:
        if name not in COORDS:
            raise ValueError(f"unknown coordinate {name!r}")
        return getattr(self, name)


def exact_sum(values) -> Fraction:
    """Exact sum of finite float64 values as a Fraction (power-of-two denominator)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    v = v[v != 0]
    if v.size == 0:
        return Fraction(0)
    if not np.all(np.isfinite(v)):
        raise OverflowError("non-finite value in exact sum")
    mant, exp = np.frexp(v)
    # mant * 2^53 is an integer below 2^53; split it so bincount sums stay exact
    m = (mant * 2.0 ** 53).astype(np.int64)
    hi = m >> 26
    lo = m - (hi << 26)
    uniq, inv = np.unique(exp, return_inverse=True)
    hs = np.bincount(inv, weights=hi.astype(np.float64))
    ls = np.bincount(inv, weights=lo.astype(np.float64))
    lowest = int(uniq[0]) - 53
    total = 0
    for e, h, l in zip(uniq.tolist(), hs.tolist(), ls.tolist()):
        total += ((int(h) << 26) + int(l)) << (e - 53 - lowest)
    return Fraction(total) * Fraction(2) ** lowest


class Accumulator:
    def spawn(self) -> "Accumulator":
        fresh = copy.deepcopy(self)
        fresh.reset()
        return fresh

    def reset(self):
        raise NotImplementedError

    def update(self, batch: OrbitBatch):
        raise NotImplementedError

    def merge(self, other: "Accumulator"):
        raise NotImplementedError

    def result(self):
        raise NotImplementedError


class Counter(Accumulator):
    """Number of multiples visited, optionally only those matching ``predicate``."""

    def __init__(self, predicate: Optional[Callable[[OrbitBatch], np.ndarray]] = None):
        self.predicate = predicate
        self.count = 0

    def reset(self):
        self.count = 0

    def update(self, batch):
        if self.predicate is None:
            self.count += len(batch)
        else:
            self.count += int(np.count_nonzero(self.predicate(batch)))

    def merge(self, other):
        self.count += other.count

    def result(self) -> int:
        return self.count


class CheckpointCounter(Accumulator):
    """Cumulative counts of matching n at or below each checkpoint."""

    def __init__(self, predicate, checkpoints):
        self.predicate = predicate
        self.checkpoints = np.asarray(sorted(checkpoints), dtype=np.int64)
        self.bins = np.zeros(len(self.checkpoints) + 1, dtype=np.int64)

    def reset(self):
        self.bins = np.zeros(len(self.checkpoints) + 1, dtype=np.int64)

    def update(self, batch):
        hit = np.abs(batch.n[self.predicate(batch)])
        idx = np.searchsorted(self.checkpoints, hit, side="left")
        self.bins += np.bincount(idx, minlength=len(self.bins))

    def merge(self, other):
        self.bins += other.bins

    def result(self) -> List[Tuple[int, int]]:
        return list(zip(self.checkpoints.tolist(), np.cumsum(self.bins[:-1]).tolist()))


@dataclass
class EmpiricalDistribution:
    """Streaming histogram over fixed bin edges.

    ``below``/``above`` count samples outside the edges; ``trimmed`` records
    the mass fractions dropped at each end when the edges came from
    quantiles.  ``below + sum(counts) + above == total`` always.
    """

    edges: np.ndarray
    counts: np.ndarray = None
    total: int = 0
    below: int = 0
    above: int = 0
    trimmed: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.float64)
        if self.edges.ndim != 1 or len(self.edges) < 2 or np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be a strictly increasing array of length >= 2")
        if self.counts is None:
            self.counts = np.zeros(len(self.edges) - 1, dtype=np.int64)

    def add(self, values):
        v = np.asarray(values, dtype=np.float64).ravel()
        v = v[~np.isnan(v)]
        lo = v < self.edges[0]
        hi = v >= self.edges[-1]
        inside = v[~(lo | hi)]
        idx = np.searchsorted(self.edges, inside, side="right") - 1
        self.counts += np.bincount(idx, minlength=len(self.counts))
        self.below += int(lo.sum())
        self.above += int(hi.sum())
        self.total += int(v.size)

    def merge(self, other: "EmpiricalDistribution"):
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        self.counts += other.counts
        self.total += other.total
        self.below += other.below
        self.above += other.above

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def cdf_at_edges(self) -> np.ndarray:
        """Empirical CDF (over all samples) evaluated at each edge."""
        if self.total == 0:
            return np.zeros(len(self.edges))
        return (self.below + np.concatenate([[0], np.cumsum(self.counts)])) / self.total

    def density(self) -> np.ndarray:
        """Per-bin density normalised to unit mass over the binned samples."""
        inside = self.counts.sum()
        if inside == 0:
            return np.zeros(len(self.counts))
        return self.counts / (inside * self.widths)


class Histogram(Accumulator):
    """:class:`EmpiricalDistribution` of one batch coordinate, optionally masked."""

    def __init__(self, edges, coord: str = "x", mask: Optional[Callable] = None):
        self.coord = coord
        self.mask = mask
        self.dist = EmpiricalDistribution(np.asarray(edges, float))

    def reset(self):
        self.dist = EmpiricalDistribution(self.dist.edges.copy())

    def update(self, batch):
        v = batch.coord(self.coord)
        if self.mask is not None:
            v = v[self.mask(batch)]
        self.dist.add(v)

    def merge(self, other):
        self.dist.merge(other.dist)

    def result(self) -> EmpiricalDistribution:
        return self.dist


class ExactSum(Accumulator):
    """Exact running sum of ``func(batch)`` (a float array)."""

    def __init__(self, func: Callable[[OrbitBatch], np.ndarray]):
        self.func = func
        self.total = Fraction(0)

    def reset(self):
        self.total = Fraction(0)

    def update(self, batch):
        self.total += exact_sum(self.func(batch))

    def merge(self, other):
        self.total += other.total

    def result(self) -> Fraction:
        return self.total


class WitnessCollector(Accumulator):
    """Rows (n, X, Y) of the multiples selected by ``predicate``, sorted by n."""

    def __init__(self, predicate, limit: Optional[int] = None):
        self.predicate = predicate
        self.limit = limit
        self.rows: List[tuple] = []

    def reset(self):
        self.rows = []

    def update(self, batch):
        m = self.predicate(batch)
        for n, X, Y in zip(batch.n[m].tolist(), batch.X[m].tolist(), batch.Y[m].tolist()):
            self.rows.append((n, X, Y))

    def merge(self, other):
        self.rows.extend(other.rows)

    def result(self) -> List[tuple]:
        rows = sorted(self.rows)
        return rows[: self.limit] if self.limit is not None else rows


class SampleRecorder(Accumulator):
    """Input-form rows (n, x, y) for every n that is a multiple of ``every``."""

    def __init__(self, every: int = 1):
        self.every = max(1, int(every))
        self.rows: List[tuple] = []

    def reset(self):
        self.rows = []

    def update(self, batch):
        m = batch.n % self.every == 0
        self.rows.extend(zip(batch.n[m].tolist(), batch.x[m].tolist(), batch.y[m].tolist()))

    def merge(self, other):
        self.rows.extend(other.rows)

    def result(self) -> List[tuple]:
        return sorted(self.rows)

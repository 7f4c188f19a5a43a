"""Logarithmic bucket arithmetic and the sparse bucket store shared by all sketches."""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from dataclasses import dataclass
from itertools import accumulate
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

MAX_COUNT = 2**64 - 1

# relative window around an integer log ratio inside which the index is re-checked
_BOUNDARY_EPS = 1e-9


class SketchError(Exception):
    """Base class for all sketch errors."""


class MissingBucketError(SketchError, KeyError):
    """Raised when removing from a bucket that holds nothing."""


class EmptySketchError(SketchError, ValueError):
    """Raised when querying a sketch that holds no items."""


class SaturationError(SketchError, OverflowError):
    """Raised when a collapse would push gamma past finite representation."""


class IncompatibleSketchError(SketchError, ValueError):
    """Raised when two sketches do not share a collapse lineage."""


def gamma_of_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return (1.0 + alpha) / (1.0 - alpha)


def alpha_of_gamma(gamma: float) -> float:
    if not (gamma > 1.0) or math.isinf(gamma):
        raise ValueError(f"gamma must be a finite value > 1, got {gamma!r}")
    return (gamma - 1.0) / (gamma + 1.0)


@dataclass(frozen=True)
class Accuracy:
    alpha: float
    gamma: float

    @classmethod
    def from_alpha(cls, alpha: float) -> "Accuracy":
        return cls(alpha, gamma_of_alpha(alpha))


def _check_value(x: float) -> None:
    if not (x > 0.0) or math.isinf(x):
        raise ValueError(f"value must be positive and finite, got {x!r}")


def bucket_index(x: float, gamma: float) -> int:
    """Return ``ceil(log_gamma(x))``, the index ``i`` with ``gamma**(i-1) < x <= gamma**i``.

    Ratios that land within a hair of an integer are settled by comparing
    against the power of gamma directly, so exact powers map to their own
    exponent instead of the next bucket up.
    """
    _check_value(x)
    if not (gamma > 1.0):
        raise ValueError(f"gamma must be > 1, got {gamma!r}")
    r = math.log(x) / math.log(gamma)
    i = math.ceil(r)
    if i - r < _BOUNDARY_EPS * max(1.0, abs(r)):
        # r sits just below an integer: x may actually exceed gamma**i
        try:
            if math.pow(gamma, i) < x:
                i += 1
        except OverflowError:
            pass
    elif r - (i - 1) < _BOUNDARY_EPS * max(1.0, abs(r)):
        # r sits just above an integer: x may equal gamma**(i-1)
        try:
            if math.pow(gamma, i - 1) >= x:
                i -= 1
        except OverflowError:
            pass
    return int(i)


def bucket_estimate(i: int, gamma: float) -> float:
    """Representative value of bucket ``i``: ``2 * gamma**i / (gamma + 1)``.

    Every value in ``(gamma**(i-1), gamma**i]`` is within relative error
    ``alpha_of_gamma(gamma)`` of this point.
    """
    if not (gamma > 1.0):
        raise ValueError(f"gamma must be > 1, got {gamma!r}")
    p = math.pow(gamma, i)  # raises OverflowError on overflow
    value = 2.0 * p / (gamma + 1.0)
    if math.isinf(value) or value == 0.0:
        raise OverflowError(f"bucket {i} is not representable for gamma={gamma!r}")
    return value


class BucketStore:
    """Sparse map from bucket index to a positive count.

    Keys are kept in a sorted list alongside the dict so ordered traversal
    and the lowest/highest buckets are cheap; cumulative counts for rank
    lookups are cached until the next mutation.
    """

    __slots__ = ("_counts", "_keys", "total", "_cum")

    def __init__(self, items: Optional[Iterable[Tuple[int, int]]] = None):
        self._counts: Dict[int, int] = {}
        self._keys: List[int] = []
        self.total = 0
        self._cum: Optional[List[int]] = None
        if items is not None:
            for i, c in items:
                self.add(i, c)

    def add(self, i: int, c: int = 1) -> None:
        if c < 1:
            raise ValueError(f"count must be >= 1, got {c!r}")
        if self.total + c > MAX_COUNT:
            raise OverflowError("bucket count overflow")
        old = self._counts.get(i)
        if old is None:
            self._counts[i] = c
            insort(self._keys, i)
        else:
            self._counts[i] = old + c
        self.total += c
        self._cum = None

    def remove_one(self, i: int) -> None:
        c = self._counts.get(i)
        if c is None:
            raise MissingBucketError(i)
        if c == 1:
            del self._counts[i]
            del self._keys[bisect_left(self._keys, i)]
        else:
            self._counts[i] = c - 1
        self.total -= 1
        self._cum = None

    def pop(self, i: int) -> int:
        """Remove bucket ``i`` entirely and return its count."""
        c = self._counts.pop(i)
        del self._keys[bisect_left(self._keys, i)]
        self.total -= c
        self._cum = None
        return c

    def count(self, i: int) -> int:
        return self._counts.get(i, 0)

    def keys(self) -> List[int]:
        """Occupied indices in ascending order (do not mutate)."""
        return self._keys

    def items(self) -> Iterator[Tuple[int, int]]:
        counts = self._counts
        for i in self._keys:
            yield i, counts[i]

    def index_at_rank(self, rank: int) -> int:
        """Lowest index whose cumulative count reaches ``rank`` (1-based)."""
        if self._cum is None:
            counts = self._counts
            self._cum = list(accumulate(counts[i] for i in self._keys))
        pos = bisect_left(self._cum, rank)
        if pos == len(self._keys):
            raise IndexError(f"rank {rank} exceeds total {self.total}")
        return self._keys[pos]

    def copy(self) -> "BucketStore":
        new = BucketStore()
        new._counts = dict(self._counts)
        new._keys = list(self._keys)
        new.total = self.total
        return new

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, i: object) -> bool:
        return i in self._counts

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BucketStore):
            return NotImplemented
        return self._counts == other._counts

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {c}" for i, c in self.items())
        return f"BucketStore({{{body}}})"


def lower_rank(q: float, n: int) -> int:
    """1-based rank of the lower q-quantile among ``n`` items."""
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    return int(math.floor(1.0 + q * (n - 1)))

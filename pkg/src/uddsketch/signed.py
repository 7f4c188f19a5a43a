"""Sketch over all of the reals: two UDDSketches plus an exact zero counter."""

from __future__ import annotations

import math

from .core import MAX_COUNT, EmptySketchError, bucket_estimate, lower_rank
from .sketch import QuantileEstimate, UDDSketch


class SignedUDDSketch:
    """Positive values go to ``positives``, negated negatives to ``negatives``.

    The two halves collapse independently; the reported guarantee is the
    larger of their current accuracies.  Zero is counted exactly.
    """

    def __init__(self, alpha0: float, m: int):
        self.positives = UDDSketch(alpha0, m)
        self.negatives = UDDSketch(alpha0, m)
        self.zero_count = 0

    @classmethod
    def _from_parts(cls, positives: UDDSketch, negatives: UDDSketch, zero_count: int) -> "SignedUDDSketch":
        s = cls.__new__(cls)
        s.positives = positives
        s.negatives = negatives
        s.zero_count = zero_count
        return s

    @property
    def n(self) -> int:
        return self.positives.n + self.negatives.n + self.zero_count

    @property
    def current_alpha(self) -> float:
        return max(self.positives.current_alpha, self.negatives.current_alpha)

    def insert(self, x: float) -> None:
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"value must be finite, got {x!r}")
        if x > 0.0:
            self.positives.insert(x)
        elif x < 0.0:
            self.negatives.insert(-x)
        else:
            if self.zero_count == MAX_COUNT:
                raise OverflowError("zero counter overflow")
            self.zero_count += 1

    def update(self, values) -> None:
        for x in values:
            self.insert(x)

    def delete(self, x: float) -> None:
        if x > 0.0:
            self.positives.delete(x)
        elif x < 0.0:
            self.negatives.delete(-x)
        elif self.zero_count:
            self.zero_count -= 1
        else:
            raise KeyError(0)

    def quantile(self, q: float) -> QuantileEstimate:
        n = self.n
        if n == 0:
            raise EmptySketchError("quantile of an empty sketch")
        r = lower_rank(q, n)
        alpha = self.current_alpha
        neg = self.negatives.store
        if r <= neg.total:
            # most negative value first: walk the negated store from the top
            i = neg.index_at_rank(neg.total - r + 1)
            return QuantileEstimate(q, -bucket_estimate(i, self.negatives.current_gamma), alpha)
        r -= neg.total
        if r <= self.zero_count:
            return QuantileEstimate(q, 0.0, alpha)
        r -= self.zero_count
        i = self.positives.store.index_at_rank(r)
        return QuantileEstimate(q, bucket_estimate(i, self.positives.current_gamma), alpha)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignedUDDSketch):
            return NotImplemented
        return (
            self.positives == other.positives
            and self.negatives == other.negatives
            and self.zero_count == other.zero_count
        )

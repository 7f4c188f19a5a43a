"""Fixed-gamma DDSketch baselines with lowest/highest/dual bucket collapsing."""

from __future__ import annotations

import math
from typing import Optional, Tuple

from .core import (
    Accuracy,
    BucketStore,
    EmptySketchError,
    bucket_estimate,
    bucket_index,
    lower_rank,
)
from .sketch import QuantileEstimate

LOW = "L"
HIGH = "H"


class DDSketch:
    """DDSketch with a bucket budget and a fixed accuracy.

    Strategy ``"L"`` folds the lowest bucket into the next one up when the
    budget overflows; ``"H"`` folds the highest bucket into the next one
    down.  Only the absorbing boundary bucket loses the accuracy guarantee.
    """

    def __init__(self, alpha: float, m: int, strategy: str = LOW):
        if strategy not in (LOW, HIGH):
            raise ValueError(f"strategy must be 'L' or 'H', got {strategy!r}")
        if int(m) != m or m < 2:
            raise ValueError(f"m must be an integer >= 2, got {m!r}")
        self.accuracy = Accuracy.from_alpha(alpha)
        self.m = int(m)
        self.strategy = strategy
        self.store = BucketStore()
        self.collapse_count = 0
        self.collapsed_boundary_index: Optional[int] = None

    @property
    def alpha(self) -> float:
        return self.accuracy.alpha

    @property
    def gamma(self) -> float:
        return self.accuracy.gamma

    @property
    def n(self) -> int:
        return self.store.total

    def insert(self, x: float) -> None:
        store = self.store
        store.add(bucket_index(x, self.accuracy.gamma))
        if len(store) > self.m:
            keys = store.keys()
            if self.strategy == LOW:
                y, z = keys[0], keys[1]
            else:
                z, y = keys[-2], keys[-1]
            # bucket y is absorbed by z
            store.add(z, store.pop(y))
            self.collapse_count += 1
            self.collapsed_boundary_index = z

    def update(self, values) -> None:
        for x in values:
            self.insert(x)

    def quantile(self, q: float) -> Tuple[QuantileEstimate, bool]:
        """Estimate plus whether it came from the collapsed boundary bucket.

        A collapsed answer carries ``guaranteed_alpha = inf``.
        """
        if self.store.total == 0:
            raise EmptySketchError("quantile of an empty sketch")
        i = self.store.index_at_rank(lower_rank(q, self.store.total))
        collapsed = self.collapse_count > 0 and i == self.collapsed_boundary_index
        alpha = math.inf if collapsed else self.accuracy.alpha
        return QuantileEstimate(q, bucket_estimate(i, self.accuracy.gamma), alpha), collapsed

    def __repr__(self) -> str:
        return (
            f"DDSketch(alpha={self.alpha!r}, m={self.m}, strategy={self.strategy!r}, "
            f"collapses={self.collapse_count}, buckets={len(self.store)}, n={self.n})"
        )


class DualDDSketch:
    """Two half-budget DDSketches, one collapsing high and one collapsing low.

    Every value goes to both halves; a query is answered by whichever half
    did not collapse the bucket holding the answer.
    """

    def __init__(self, alpha: float, m: int):
        if int(m) != m or m < 4:
            raise ValueError(f"m must be an integer >= 4, got {m!r}")
        self.m = int(m)
        self.low = DDSketch(alpha, m // 2, HIGH)
        self.high = DDSketch(alpha, m - m // 2, LOW)

    @property
    def alpha(self) -> float:
        return self.low.alpha

    @property
    def n(self) -> int:
        return self.low.n

    @property
    def collapse_count(self) -> int:
        return self.low.collapse_count + self.high.collapse_count

    def insert(self, x: float) -> None:
        self.low.insert(x)
        self.high.insert(x)

    def update(self, values) -> None:
        for x in values:
            self.insert(x)

    def quantile_with_source(self, q: float) -> Tuple[QuantileEstimate, bool, DDSketch]:
        est_h, coll_h = self.high.quantile(q)
        est_l, coll_l = self.low.quantile(q)
        if coll_h != coll_l:
            return (est_l, False, self.low) if coll_h else (est_h, False, self.high)
        # both clean or both collapsed: fewer collapses wins, ties go to the L half
        if self.low.collapse_count < self.high.collapse_count:
            return est_l, coll_l, self.low
        return est_h, coll_h, self.high

    def quantile(self, q: float) -> Tuple[QuantileEstimate, bool]:
        est, collapsed, _ = self.quantile_with_source(q)
        return est, collapsed

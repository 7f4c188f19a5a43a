"""UDDSketch: a relative-error quantile sketch with uniform bucket collapse."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List

from .core import (
    BucketStore,
    EmptySketchError,
    IncompatibleSketchError,
    SaturationError,
    bucket_estimate,
    bucket_index,
    gamma_of_alpha,
    lower_rank,
)

DEFAULT_COLLAPSES = 10
_ALPHA_CEILING = 1.0 - 1e-12
_LINEAGE_RTOL = 1e-9


@dataclass(frozen=True)
class QuantileEstimate:
    q: float
    value: float
    guaranteed_alpha: float


def alpha_after(alpha0: float, k: int) -> float:
    """Accuracy after ``k`` uniform collapses starting from ``alpha0``.

    One collapse maps ``a`` to ``2a / (1 + a**2) = tanh(2 * artanh(a))``, so
    ``k`` of them give ``tanh(2**k * artanh(alpha0))``.
    """
    if not (0.0 < alpha0 < 1.0):
        raise ValueError(f"alpha0 must lie in (0, 1), got {alpha0!r}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k!r}")
    if k == 0:
        return alpha0
    return math.tanh(math.ldexp(math.atanh(alpha0), k))


def alpha0_for(alpha_target: float, k: int = DEFAULT_COLLAPSES) -> float:
    """Starting accuracy that degrades to exactly ``alpha_target`` after ``k`` collapses."""
    if not (0.0 < alpha_target < 1.0):
        raise ValueError(f"alpha_target must lie in (0, 1), got {alpha_target!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    return math.tanh(math.ldexp(math.atanh(alpha_target), -k))


def error_bound(x_min: float, x_max: float, m: int) -> float:
    """Worst-case accuracy of a budget-``m`` sketch over ``[x_min, x_max]``.

    ``(g**2 - 1) / (g**2 + 1)`` with ``g = (x_max / x_min) ** (1 / m)``,
    evaluated as ``tanh(ln(x_max / x_min) / m)``.

    This is the nominal bound.  Because bucket boundaries are fixed powers
    of gamma, a range slightly wider than ``m - 1`` bucket widths can still
    occupy ``m + 1`` buckets and force one more collapse, so adversarial
    inputs can end as high as ``tanh(ln(x_max / x_min) / (m - 1))``.
    """
    if not (0.0 < x_min <= x_max):
        raise ValueError("need 0 < x_min <= x_max")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m!r}")
    return math.tanh((math.log(x_max) - math.log(x_min)) / m)


def min_buckets_for(alpha_target: float, x_min: float, x_max: float) -> int:
    """Smallest budget ``m >= 2`` whose worst-case accuracy over the range is ``alpha_target``."""
    if not (0.0 < alpha_target < 1.0):
        raise ValueError(f"alpha_target must lie in (0, 1), got {alpha_target!r}")
    if not (0.0 < x_min <= x_max) or math.isinf(x_max):
        raise ValueError("need 0 < x_min <= x_max < inf")
    span = math.log(x_max) - math.log(x_min)
    if span == 0.0:
        return 2
    # comparison slack keeps exact cases like tanh(ln 2) == 0.6 from rounding up
    limit = alpha_target * (1.0 + 1e-12)
    m = max(2, math.ceil(2.0 * span / math.log(gamma_of_alpha(alpha_target))))
    while m > 2 and error_bound(x_min, x_max, m - 1) <= limit:
        m -= 1
    while error_bound(x_min, x_max, m) > limit:
        m += 1
    return m


class UDDSketch:
    """Quantile sketch holding at most ``m`` logarithmic buckets.

    When an insertion pushes the bucket count above ``m`` the whole store is
    collapsed uniformly, pairing indices ``(2j-1, 2j)`` into ``j``; gamma is
    squared and alpha moves to ``2a / (1 + a**2)``.  The reported
    ``current_alpha`` bounds the relative error of every quantile.
    """

    __slots__ = ("alpha0", "m", "k", "current_alpha", "current_gamma", "store")

    def __init__(self, alpha0: float, m: int):
        if not (0.0 < alpha0 < 1.0):
            raise ValueError(f"alpha0 must lie in (0, 1), got {alpha0!r}")
        if int(m) != m or m < 2:
            raise ValueError(f"m must be an integer >= 2, got {m!r}")
        self.alpha0 = float(alpha0)
        self.m = int(m)
        self.k = 0
        self.current_alpha = self.alpha0
        self.current_gamma = gamma_of_alpha(self.alpha0)
        self.store = BucketStore()

    @classmethod
    def for_accuracy(cls, alpha: float, m: int, k: int = DEFAULT_COLLAPSES) -> "UDDSketch":
        """Sketch whose accuracy reaches ``alpha`` after ``k`` collapses."""
        return cls(alpha0_for(alpha, k), m)

    @classmethod
    def _restore(cls, alpha0: float, m: int, k: int, store: BucketStore) -> "UDDSketch":
        s = cls(alpha0, m)
        for _ in range(k):
            s._advance()
        s.store = store
        return s

    @property
    def n(self) -> int:
        return self.store.total

    def __len__(self) -> int:
        return self.store.total

    def insert(self, x: float) -> None:
        i = bucket_index(x, self.current_gamma)
        store = self.store
        store.add(i)
        if len(store) > self.m:
            saved = (store, self.k, self.current_alpha, self.current_gamma)
            try:
                self._collapse_to_budget()
            except SaturationError:
                store.remove_one(i)
                self.store, self.k, self.current_alpha, self.current_gamma = saved
                raise

    def update(self, values: Iterable[float]) -> None:
        for x in values:
            self.insert(x)

    def delete(self, x: float) -> None:
        """Remove one occurrence of ``x``; never triggers or undoes a collapse."""
        self.store.remove_one(bucket_index(x, self.current_gamma))

    def _advance(self) -> None:
        gamma = self.current_gamma * self.current_gamma
        a = self.current_alpha
        alpha = 2.0 * a / (1.0 + a * a)
        if math.isinf(gamma) or alpha >= _ALPHA_CEILING:
            raise SaturationError(
                f"collapse {self.k + 1} would saturate gamma ({gamma!r})"
            )
        self.current_gamma = gamma
        self.current_alpha = alpha
        self.k += 1

    def uniform_collapse(self) -> None:
        self._advance()
        old = self.store
        new = BucketStore()
        counts = new._counts
        keys = new._keys
        # -(-i // 2) is ceil(i / 2); the map is monotone so keys stay sorted
        for i, c in old.items():
            j = -(-i // 2)
            if j in counts:
                counts[j] += c
            else:
                counts[j] = c
                keys.append(j)
        new.total = old.total
        self.store = new

    def _collapse_to_budget(self) -> None:
        while len(self.store) > self.m:
            self.uniform_collapse()

    def quantile(self, q: float) -> QuantileEstimate:
        if self.store.total == 0:
            raise EmptySketchError("quantile of an empty sketch")
        r = lower_rank(q, self.store.total)
        i = self.store.index_at_rank(r)
        return QuantileEstimate(q, bucket_estimate(i, self.current_gamma), self.current_alpha)

    def quantiles(self, qs: Iterable[float]) -> List[QuantileEstimate]:
        return [self.quantile(q) for q in qs]

    def copy(self) -> "UDDSketch":
        new = UDDSketch.__new__(UDDSketch)
        new.alpha0 = self.alpha0
        new.m = self.m
        new.k = self.k
        new.current_alpha = self.current_alpha
        new.current_gamma = self.current_gamma
        new.store = self.store.copy()
        return new

    def merge(self, other: "UDDSketch") -> "UDDSketch":
        """Fold ``other`` into this sketch in place and return ``self``.

        The finer of the two is collapsed until gammas agree, stores are
        summed, and the result is collapsed back under the budget.  On error
        ``self`` is left untouched.
        """
        if self.m != other.m:
            raise IncompatibleSketchError(f"budgets differ: {self.m} vs {other.m}")
        d = _lineage_distance(self.current_gamma, other.current_gamma)
        # the finer side's lineage is kept so gamma stays a function of (alpha0, k)
        if d >= 0:
            fine, coarse = self.copy(), other
        else:
            fine, coarse = other.copy(), self
        for _ in range(abs(d)):
            fine.uniform_collapse()
        for i, c in coarse.store.items():
            fine.store.add(i, c)
        fine._collapse_to_budget()
        self.alpha0 = fine.alpha0
        self.k = fine.k
        self.current_alpha = fine.current_alpha
        self.current_gamma = fine.current_gamma
        self.store = fine.store
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UDDSketch):
            return NotImplemented
        return (
            self.alpha0 == other.alpha0
            and self.m == other.m
            and self.k == other.k
            and self.store == other.store
        )

    def __repr__(self) -> str:
        return (
            f"UDDSketch(alpha0={self.alpha0!r}, m={self.m}, k={self.k}, "
            f"alpha={self.current_alpha!r}, buckets={len(self.store)}, n={self.n})"
        )


def _lineage_distance(gamma_a: float, gamma_b: float) -> int:
    """Return ``d`` with ``ln(gamma_a) * 2**d == ln(gamma_b)``; raise if no such integer."""
    ratio = math.log(gamma_b) / math.log(gamma_a)
    d = round(math.log2(ratio))
    if abs(ratio - math.ldexp(1.0, d)) > _LINEAGE_RTOL * math.ldexp(1.0, d):
        raise IncompatibleSketchError(
            f"gamma {gamma_a!r} and {gamma_b!r} do not share a collapse lineage"
        )
    return d


def merge(a: UDDSketch, b: UDDSketch) -> UDDSketch:
    """Return a new sketch summarizing both inputs; neither argument is modified."""
    return a.copy().merge(b)


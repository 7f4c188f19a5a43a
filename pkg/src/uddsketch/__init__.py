"""Relative-error streaming quantiles with uniformly collapsing log buckets."""

from .core import (
    Accuracy,
    BucketStore,
    EmptySketchError,
    IncompatibleSketchError,
    MissingBucketError,
    SaturationError,
    SketchError,
    alpha_of_gamma,
    bucket_estimate,
    bucket_index,
    gamma_of_alpha,
)
from .ddsketch import DDSketch, DualDDSketch
from .signed import SignedUDDSketch
from .sketch import (
    QuantileEstimate,
    UDDSketch,
    alpha0_for,
    alpha_after,
    error_bound,
    merge,
    min_buckets_for,
)

__all__ = [
    "Accuracy",
    "BucketStore",
    "DDSketch",
    "DualDDSketch",
    "EmptySketchError",
    "IncompatibleSketchError",
    "MissingBucketError",
    "QuantileEstimate",
    "SaturationError",
    "SignedUDDSketch",
    "SketchError",
    "UDDSketch",
    "alpha0_for",
    "alpha_after",
    "alpha_of_gamma",
    "bucket_estimate",
    "bucket_index",
    "error_bound",
    "gamma_of_alpha",
    "merge",
    "min_buckets_for",
]

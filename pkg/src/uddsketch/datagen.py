"""Seeded synthetic datasets for the benchmark families.

Parameter conventions follow the classic statistical-software definitions:

* ``Exp(0.5)`` is rate 0.5 (mean 2).
* ``Gamma(2, 4)`` is shape 2, scale 4.
* ``Lognormal(1, 1.5)`` is (mu, sigma) of the underlying normal.
* ``Pareto(2, 0.5)`` is minimum (scale) 2, shape 0.5.
* ``HalfNormal(0.5)`` is parameterized by theta, sigma = sqrt(pi/2) / theta.
* ``InverseGaussian(10, 5)`` is mean 10, shape 5.
* ``ExtremeValue(20, 2)`` is the maximum-type Gumbel (right-skewed) with
  location 20, scale 2; ``Gumbel(100, 4)`` is the minimum-type (left-skewed)
  Gumbel with location 100, scale 4.

Non-positive draws are rejected and redrawn so every value is a valid
sketch input.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

log = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, Tuple[float, ...], int], np.ndarray]


def _beta(rng, p, n):
    return rng.beta(p[0], p[1], n)


def _chisquare(rng, p, n):
    return rng.chisquare(p[0], n)


def _exponential(rng, p, n):
    return rng.exponential(1.0 / p[0], n)


def _gumbel_max(rng, p, n):
    return rng.gumbel(p[0], p[1], n)


def _gumbel_min(rng, p, n):
    return 2.0 * p[0] - rng.gumbel(p[0], p[1], n)


def _gamma(rng, p, n):
    return rng.gamma(p[0], p[1], n)


def _halfnormal(rng, p, n):
    sigma = math.sqrt(math.pi / 2.0) / p[0]
    return np.abs(rng.normal(0.0, sigma, n))


def _inverse_gaussian(rng, p, n):
    return rng.wald(p[0], p[1], n)


def _laplace(rng, p, n):
    return rng.laplace(p[0], p[1], n)


def _logistic(rng, p, n):
    return rng.logistic(p[0], p[1], n)


def _lognormal(rng, p, n):
    return rng.lognormal(p[0], p[1], n)


def _normal(rng, p, n):
    return rng.normal(p[0], p[1], n)


def _pareto(rng, p, n):
    # numpy draws the Lomax form; shift by one and scale to the minimum
    return p[0] * (1.0 + rng.pareto(p[1], n))


def _uniform(rng, p, n):
    return rng.uniform(p[0], p[1], n)


# name -> (family label, parameters, sampler)
FAMILIES: Dict[str, Tuple[str, Tuple[float, ...], Sampler]] = {
    "betaL": ("Beta", (5.0, 1.5), _beta),
    "betaR": ("Beta", (1.5, 5.0), _beta),
    "chisquare": ("ChiSquare", (5.0,), _chisquare),
    "exponential": ("Exponential", (0.5,), _exponential),
    "extremevalue": ("ExtremeValue", (20.0, 2.0), _gumbel_max),
    "gamma": ("Gamma", (2.0, 4.0), _gamma),
    "gumbel": ("Gumbel", (100.0, 4.0), _gumbel_min),
    "halfnormal": ("HalfNormal", (0.5,), _halfnormal),
    "inversegaussian": ("InverseGaussian", (10.0, 5.0), _inverse_gaussian),
    "laplace": ("Laplace", (200.0, 10.0), _laplace),
    "logistic": ("Logistic", (200.0, 10.0), _logistic),
    "lognormal": ("Lognormal", (1.0, 1.5), _lognormal),
    "normal": ("Normal", (50.0, 2.0), _normal),
    "pareto": ("Pareto", (2.0, 0.5), _pareto),
    "uniform": ("Uniform", (0.0, 2.5e4), _uniform),
}

DATASET_NAMES = tuple(FAMILIES)

_PARAM_COUNT = {
    "Beta": 2, "ChiSquare": 1, "Exponential": 1, "ExtremeValue": 2, "Gamma": 2,
    "Gumbel": 2, "HalfNormal": 1, "InverseGaussian": 2, "Laplace": 2,
    "Logistic": 2, "Lognormal": 2, "Normal": 2, "Pareto": 2, "Uniform": 2,
}
_SAMPLERS: Dict[str, Sampler] = {fam: smp for fam, _, smp in FAMILIES.values()}
_MAX_REDRAW_ROUNDS = 1000


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    distribution: str
    params: Tuple[float, ...]
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in _SAMPLERS:
            raise ValueError(f"unsupported distribution {self.distribution!r}")
        if len(self.params) != _PARAM_COUNT[self.distribution]:
            raise ValueError(f"{self.distribution} takes {_PARAM_COUNT[self.distribution]} parameters")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        _validate_params(self.distribution, self.params)

    @property
    def params_text(self) -> str:
        return ";".join(repr(float(p)) for p in self.params)


def _validate_params(family: str, p: Tuple[float, ...]) -> None:
    if not all(math.isfinite(v) for v in p):
        raise ValueError("parameters must be finite")
    if family == "Uniform":
        if not (0.0 <= p[0] < p[1]):
            raise ValueError("Uniform needs 0 <= low < high")
    elif family in ("Normal", "Laplace", "Logistic", "Lognormal", "ExtremeValue", "Gumbel"):
        if p[1] <= 0:
            raise ValueError(f"{family} scale must be positive")
    elif any(v <= 0 for v in p):
        raise ValueError(f"{family} parameters must be positive")


def spec_for(name: str, n: int, seed: int = 0) -> DatasetSpec:
    try:
        family, params, _ = FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown dataset {name!r}; valid names: {', '.join(DATASET_NAMES)}"
        ) from None
    return DatasetSpec(name, family, params, n, seed)


def generate(spec: DatasetSpec) -> np.ndarray:
    """Draw ``spec.n`` strictly positive samples, reproducibly from ``spec.seed``."""
    sampler = _SAMPLERS[spec.distribution]
    rng = np.random.default_rng(spec.seed)
    data = np.asarray(sampler(rng, spec.params, spec.n), dtype=np.float64)
    rejected = 0
    for _ in range(_MAX_REDRAW_ROUNDS):
        bad = ~(data > 0.0) | ~np.isfinite(data)
        nbad = int(bad.sum())
        if nbad == 0:
            break
        rejected += nbad
        data[bad] = sampler(rng, spec.params, nbad)
    else:
        raise ValueError(f"{spec.name}: could not draw positive values")
    if rejected:
        log.info("%s: redrew %d non-positive samples", spec.name, rejected)
    return data


# ---------------------------------------------------------------- files

BINARY_MAGIC = b"UDDSDATA"
_BIN_HEADER = struct.Struct("<8sHHIQQ")  # 32 bytes
_BIN_VERSION = 1


def write_text(spec: DatasetSpec, data: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {spec.name},{spec.distribution},{spec.params_text},{spec.n},{spec.seed}\n")
        fh.writelines(f"{float(v)!r}\n" for v in data)


def write_binary(spec: DatasetSpec, data: np.ndarray, path) -> None:
    code = DATASET_NAMES.index(spec.name) if spec.name in FAMILIES else 0xFFFF
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(BINARY_MAGIC, _BIN_VERSION, code, 0, len(data), spec.seed))
        fh.write(np.asarray(data, dtype="<f8").tobytes())


def read_dataset(path) -> np.ndarray:
    """Load a dataset file written in either format."""
    with open(path, "rb") as fh:
        head = fh.read(_BIN_HEADER.size)
        if head[:8] == BINARY_MAGIC:
            _, version, _, _, n, _ = _BIN_HEADER.unpack(head)
            if version != _BIN_VERSION:
                raise ValueError(f"unsupported dataset version {version}")
            data = np.frombuffer(fh.read(), dtype="<f8")
            if len(data) != n:
                raise ValueError(f"expected {n} values, found {len(data)}")
            return data.astype(np.float64)
    return np.loadtxt(path, comments="#", dtype=np.float64, ndmin=1)


@dataclass
class DatasetSummary:
    name: str
    n: int
    minimum: float
    maximum: float
    params: Tuple[float, ...] = field(default_factory=tuple)


def summarize(spec: DatasetSpec, data: np.ndarray) -> DatasetSummary:
    return DatasetSummary(spec.name, len(data), float(data.min()), float(data.max()), spec.params)

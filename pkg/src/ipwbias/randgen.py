"""Seeded, stream-splittable random generation.

Every random draw in the package goes through a :class:`SeedSpec`. A stream is a
pure function of ``(master_seed, stream_id)``, so replications can run in any
order, in any number of processes, and still reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError

_U64 = 2**64

ArrayOrFloat = Union[float, np.ndarray]


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = 1
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < _U64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def child(self, *keys: int) -> "SeedSpec":
        """Derive a new stream id from this one and a tuple of integer keys.

        Used to give each (purpose, sample size, replication) its own stream
        without hand-managing id ranges.
        """
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *map(int, keys)))
        lo, hi = seq.generate_state(2, dtype=np.uint32)
        return SeedSpec(self.master_seed, (int(hi) << 32) | int(lo))


def make_stream(seed: SeedSpec) -> np.random.Generator:
    """Return a PCG64 generator keyed on ``(master_seed, stream_id)``."""
    seq = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.stream_id,))
    return np.random.Generator(np.random.PCG64(seq))


# Distribution specs. Parameters may be arrays (one value per draw) so that
# conditional draws like Poisson(mu(X_i)) use the same validation path.


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def validate(self):
        if not np.all(np.asarray(self.low) < np.asarray(self.high)):
            raise ParameterError(f"Uniform needs low < high, got ({self.low}, {self.high})")

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def var(self):
        return (self.high - self.low) ** 2 / 12.0


@dataclass(frozen=True)
class Bernoulli:
    p: ArrayOrFloat

    def validate(self):
        p = np.asarray(self.p)
        if not (np.all(p >= 0) and np.all(p <= 1)):
            raise ParameterError("Bernoulli probability must lie in [0, 1]")

    @property
    def mean(self):
        return self.p

    @property
    def var(self):
        return self.p * (1 - self.p)


@dataclass(frozen=True)
class Poisson:
    lam: ArrayOrFloat

    def validate(self):
        if not np.all(np.asarray(self.lam) > 0):
            raise ParameterError("Poisson rate must be positive")

    @property
    def mean(self):
        return self.lam

    @property
    def var(self):
        return self.lam


@dataclass(frozen=True)
class Normal:
    mu: ArrayOrFloat
    sigma: float

    def validate(self):
        if not np.all(np.asarray(self.sigma) > 0):
            raise ParameterError("Normal standard deviation must be positive")

    @property
    def mean(self):
        return self.mu

    @property
    def var(self):
        return self.sigma**2


@dataclass(frozen=True)
class Gamma:
    """Gamma parameterised by shape and mean; the scale is ``mean / shape``."""

    shape: float
    mean: ArrayOrFloat

    def validate(self):
        if not np.all(np.asarray(self.shape) > 0):
            raise ParameterError("Gamma shape must be positive")
        if not np.all(np.asarray(self.mean) > 0):
            raise ParameterError("Gamma mean must be positive")

    @property
    def var(self):
        return np.asarray(self.mean) ** 2 / self.shape


DistributionSpec = Union[Uniform, Bernoulli, Poisson, Normal, Gamma]


def sample(stream: np.random.Generator, dist: DistributionSpec, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. values (or one per row when parameters are arrays).

    Bernoulli draws are taken as ``U < p`` so that a probability vector maps to
    the same uniform stream regardless of its values.
    """
    if n < 0:
        raise ParameterError("n must be non-negative")
    dist.validate()
    if isinstance(dist, Uniform):
        return stream.uniform(dist.low, dist.high, size=n)
    if isinstance(dist, Bernoulli):
        return (stream.random(n) < dist.p).astype(float)
    if isinstance(dist, Poisson):
        return stream.poisson(dist.lam, size=n).astype(float)
    if isinstance(dist, Normal):
        return stream.normal(dist.mu, dist.sigma, size=n)
    if isinstance(dist, Gamma):
        return stream.gamma(dist.shape, np.asarray(dist.mean) / dist.shape, size=n)
    raise ParameterError(f"unknown distribution {dist!r}")


def dist_to_dict(dist: DistributionSpec) -> dict:
    kind = type(dist).__name__.lower()
    fields = {k: float(v) for k, v in vars(dist).items()}
    return {"dist": kind, **fields}


def dist_from_dict(d: dict) -> DistributionSpec:
    kinds = {"uniform": Uniform, "bernoulli": Bernoulli, "poisson": Poisson, "normal": Normal, "gamma": Gamma}
    d = dict(d)
    try:
        cls = kinds[d.pop("dist").lower()]
    except KeyError as exc:
        raise ParameterError(f"unknown distribution in config: {exc}") from None
    dist = cls(**d)
    dist.validate()
    return dist

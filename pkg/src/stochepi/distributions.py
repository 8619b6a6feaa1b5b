"""Seeded random streams and the samplers used by the simulator.

Every stream wraps a :class:`numpy.random.Generator` driven by PCG64 and
seeded through :class:`numpy.random.SeedSequence`.  Child streams for
replicates are derived by appending an index to the seed sequence's spawn
key, so ``(seed, index path)`` fully determines the draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParameterError",
    "RngStream",
    "make_rng",
    "derive_stream",
    "sample_poisson",
    "sample_erlang_days",
    "sample_erlang_days_batch",
    "sample_binomial",
    "sample_bernoulli",
    "sample_group",
]

_SEED_MASK = (1 << 64) - 1


class ParameterError(ValueError):
    """A sampler was called with an out-of-range parameter."""


@dataclass
class RngStream:
    """A reproducible random stream.

    Attributes:
        seed: 64-bit unsigned base seed.
        key: spawn path from the base seed; empty for a root stream.
    """

    seed: int
    key: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed <= _SEED_MASK:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def fresh(self) -> "RngStream":
        """Return a new stream positioned at the start of the same sequence."""
        return RngStream(self.seed, self.key)


def make_rng(seed: int) -> RngStream:
    return RngStream(int(seed))


def derive_stream(base: RngStream, index: int) -> RngStream:
    """Child stream determined by ``(base.seed, base.key, index)``.

    The child is independent of how many draws were already taken from
    ``base``.
    """
    if index < 0:
        raise ParameterError(f"stream index must be non-negative, got {index}")
    return RngStream(base.seed, base.key + (int(index),))


def _check_prob(p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"probability must lie in [0, 1], got {p}")


def sample_poisson(rng: RngStream, mean: float, size=None):
    if not math.isfinite(mean) or mean < 0:
        raise ParameterError(f"Poisson mean must be finite and >= 0, got {mean}")
    if size is None:
        return int(rng.generator.poisson(mean))
    return rng.generator.poisson(mean, size)


def _check_erlang(k: int, rate: float) -> None:
    if int(k) != k or k < 1:
        raise ParameterError(f"Erlang shape must be a positive integer, got {k}")
    if not math.isfinite(rate) or rate <= 0:
        raise ParameterError(f"Erlang rate must be positive, got {rate}")


def sample_erlang_days_batch(rng: RngStream, k: int, rate: float, size: int) -> np.ndarray:
    """``size`` Erlang(k, rate) durations rounded to whole days, minimum 1.

    An Erlang variate is drawn as a Gamma variate with integer shape, which
    is the same law as a sum of ``k`` exponentials but one draw per person.
    """
    _check_erlang(k, rate)
    x = rng.generator.gamma(float(k), 1.0 / rate, size)
    return np.maximum(np.rint(x), 1).astype(np.int64)


def sample_erlang_days(rng: RngStream, k: int, rate: float) -> int:
    return int(sample_erlang_days_batch(rng, k, rate, 1)[0])


def sample_binomial(rng: RngStream, n: int, p: float, size=None):
    _check_prob(p)
    if np.any(np.asarray(n) < 0):
        raise ParameterError(f"binomial trials must be >= 0, got {n}")
    if size is None:
        return int(rng.generator.binomial(n, p))
    return rng.generator.binomial(n, p, size)


def sample_bernoulli(rng: RngStream, p: float) -> bool:
    _check_prob(p)
    return bool(rng.generator.random() < p)


def sample_group(rng: RngStream, sizes) -> int:
    """Index of a group chosen with probability proportional to ``sizes``."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.ndim != 1 or len(sizes) == 0 or np.any(sizes < 0) or sizes.sum() <= 0:
        raise ParameterError("group sizes must be non-negative with a positive total")
    return int(rng.generator.choice(len(sizes), p=sizes / sizes.sum()))

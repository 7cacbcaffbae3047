"""Benchmark objectives, domain normalization, and regret metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .subspace import Box

LOG_REGRET_OFFSET = 1e-8


def ackley(x) -> float:
    """Ackley function; minimum 0 at the origin.

    Grouped so the two exponential terms cancel exactly at the optimum.
    """
    x = np.asarray(x, dtype=float)
    rms = math.sqrt(float(np.mean(x**2)))
    cos_mean = float(np.mean(np.cos(2.0 * math.pi * x)))
    return 20.0 * (1.0 - math.exp(-0.2 * rms)) + (math.e - math.exp(cos_mean))


def rosenbrock(x) -> float:
    """Rosenbrock function; minimum 0 at (1, ..., 1). Needs D >= 2."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("rosenbrock requires at least two dimensions")
    return float(
        np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2)
    )


@dataclass(frozen=True)
class Benchmark:
    """A named objective with native bounds and a known global minimum."""

    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    optimum_value: float
    optimizer: np.ndarray
    fn: Callable[[np.ndarray], float]

    def __call__(self, x_native) -> float:
        return self.fn(np.asarray(x_native, dtype=float))


def get_benchmark(name: str, dim: int) -> Benchmark:
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if name == "ackley":
        bound = 32.768
        return Benchmark(
            name="ackley",
            dim=dim,
            lower=np.full(dim, -bound),
            upper=np.full(dim, bound),
            optimum_value=0.0,
            optimizer=np.zeros(dim),
            fn=ackley,
        )
    if name == "rosenbrock":
        if dim < 2:
            raise ValueError("rosenbrock requires dim >= 2")
        return Benchmark(
            name="rosenbrock",
            dim=dim,
            lower=np.full(dim, -5.0),
            upper=np.full(dim, 10.0),
            optimum_value=0.0,
            optimizer=np.ones(dim),
            fn=rosenbrock,
        )
    raise ValueError(f"unknown benchmark {name!r}")


def normalized_box(dim: int) -> Box:
    """The search domain used by the optimizer: ``[-0.5, 0.5]^dim``."""
    return Box.unit_centered(dim)


def to_native(bench: Benchmark, x_norm) -> np.ndarray:
    """Map a point of ``[-0.5, 0.5]^D`` to the benchmark's native units."""
    x_norm = np.asarray(x_norm, dtype=float)
    if np.any(x_norm < -0.5 - 1e-12) or np.any(x_norm > 0.5 + 1e-12):
        raise ValueError("normalized point lies outside [-0.5, 0.5]^D")
    return bench.lower + (x_norm + 0.5) * (bench.upper - bench.lower)


def to_normalized(bench: Benchmark, x_native) -> np.ndarray:
    """Inverse of :func:`to_native`."""
    x_native = np.asarray(x_native, dtype=float)
    return (x_native - bench.lower) / (bench.upper - bench.lower) - 0.5


def make_objective(bench: Benchmark) -> Callable[[np.ndarray], float]:
    """Objective over the normalized domain."""

    def objective(x_norm):
        return bench(to_native(bench, x_norm))

    return objective


def simple_regret(bench: Benchmark, x_native) -> float:
    """Optimality gap ``f(x) - f(x_opt)`` of a candidate in native units."""
    return bench(x_native) - bench.optimum_value


def log_regret(r: float) -> float:
    """``log10`` of the regret, offset by 1e-8 against divergence at zero."""
    if r < 0.0:
        raise ValueError("regret must be nonnegative")
    return math.log10(r + LOG_REGRET_OFFSET)

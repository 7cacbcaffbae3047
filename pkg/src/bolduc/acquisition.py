"""Lower-confidence-bound acquisition and its maximizers.

The acquisition is ``-(mean - kappa * sqrt(variance))``, maximized. Inside
a subspace the maximizer is a deterministic dense grid over the clipped
region followed by golden-section refinement; over the full domain it is
seeded random multistart plus simplex refinement. Ties always resolve to
the lowest grid index so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .gpr import Posterior
from .subspace import (
    Box,
    Subspace,
    embed,
    feasible_interval_along,
    feasible_line_interval,
)

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AcquisitionConfig:
    """Exploration weight and search resolution.

    ``kappa_schedule`` optionally maps the observation count t to a kappa
    value; when unset, ``kappa`` is used at every iteration.
    """

    kappa: float = 2.0
    grid_points_1d: int = 1001
    grid_points_2d: int = 64
    refine_iters: int = 40
    kappa_schedule: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        if self.grid_points_1d < 3 or self.grid_points_2d < 3:
            raise ValueError("grid sizes must be >= 3")

    def kappa_at(self, t: int) -> float:
        return self.kappa_schedule(t) if self.kappa_schedule else self.kappa


def lcb(model: Posterior, x, kappa: float) -> float:
    """Acquisition value ``-mean + kappa * sqrt(variance)``; larger is better."""
    mean, var = model.predict(x)
    return -mean + kappa * math.sqrt(var)


def lcb_batch(model: Posterior, X, kappa: float) -> np.ndarray:
    means, variances = model.predict_batch(X)
    return -means + kappa * np.sqrt(variances)


def _golden_max(f, a: float, b: float, iters: int) -> tuple[float, float]:
    """Golden-section maximization of ``f`` on ``[a, b]``."""
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize_over_region(
    model: Posterior,
    sub: Subspace,
    box: Box,
    acq: AcquisitionConfig,
    kappa: float | None = None,
) -> np.ndarray:
    """Argmax of the acquisition over the subspace clipped to the box.

    Deterministic: dense grid, first-maximum tie-breaking, then
    golden-section refinement that is only accepted when it strictly beats
    the grid.
    """
    kappa = acq.kappa if kappa is None else kappa
    if sub.dim == 1:
        return _maximize_on_line(model, sub, box, acq, kappa)
    if sub.dim == 2:
        return _maximize_on_plane(model, sub, box, acq, kappa)
    raise ValueError("only 1-D and 2-D subspace maximizers are provided")


def _maximize_on_line(model, sub, box, acq, kappa) -> np.ndarray:
    lo, hi = feasible_line_interval(sub, box)
    alphas = np.linspace(lo, hi, acq.grid_points_1d)
    pts = sub.anchor[None, :] + alphas[:, None] * sub.basis[:, 0][None, :]
    vals = lcb_batch(model, pts, kappa)
    i = int(np.argmax(vals))
    best_alpha, best_val = float(alphas[i]), float(vals[i])
    a = float(alphas[max(i - 1, 0)])
    b = float(alphas[min(i + 1, alphas.size - 1)])
    if b > a and acq.refine_iters > 0:
        alpha, val = _golden_max(
            lambda s: lcb(model, embed(sub, [s]), kappa), a, b, acq.refine_iters
        )
        if val > best_val:
            best_alpha, best_val = alpha, val
    return box.clip(embed(sub, [best_alpha]))


def _maximize_on_plane(model, sub, box, acq, kappa) -> np.ndarray:
    half = box.chord
    g = np.linspace(-half, half, acq.grid_points_2d)
    la, lb = np.meshgrid(g, g, indexing="ij")
    locals_ = np.column_stack([la.ravel(), lb.ravel()])
    pts = sub.anchor[None, :] + locals_ @ sub.basis.T
    inside = np.all((pts >= box.lower) & (pts <= box.upper), axis=1)
    if not np.any(inside):
        # Degenerate grid vs a tiny feasible patch: fall back to the anchor.
        best_local = np.zeros(2)
        best_val = lcb(model, sub.anchor, kappa)
    else:
        vals = np.where(inside, lcb_batch(model, pts, kappa), -np.inf)
        i = int(np.argmax(vals))
        best_local = locals_[i].copy()
        best_val = float(vals[i])

    # Alternating per-axis golden-section sweeps, clipped to the feasible
    # segment through the current point.
    current = best_local.copy()
    current_val = best_val
    sweeps = 4
    iters = max(1, acq.refine_iters // sweeps)
    for sweep in range(sweeps):
        axis = sweep % 2
        a, b = feasible_interval_along(sub, box, current, axis)
        if b - a < 1e-14:
            continue

        def f(s, axis=axis):
            trial = current.copy()
            trial[axis] = s
            return lcb(model, embed(sub, trial), kappa)

        s, val = _golden_max(f, a, b, iters)
        if val > current_val:
            current[axis] = s
            current_val = val
    final = current if current_val > best_val else best_local
    return box.clip(embed(sub, final))


def maximize_full_space(
    model: Posterior,
    box: Box,
    acq: AcquisitionConfig,
    rng: np.random.Generator,
    kappa: float | None = None,
    n_samples: int = 1024,
    n_refine: int = 4,
) -> np.ndarray:
    """Argmax of the acquisition over the whole box.

    Random multistart (drawn from ``rng``) scored in batch, then simplex
    refinement from the best few samples.
    """
    kappa = acq.kappa if kappa is None else kappa
    samples = rng.uniform(box.lower, box.upper, size=(n_samples, box.dim))
    vals = lcb_batch(model, samples, kappa)
    order = np.argsort(-vals, kind="stable")[:n_refine]
    best_x = samples[order[0]].copy()
    best_val = float(vals[order[0]])
    bounds = list(zip(box.lower, box.upper))
    for idx in order:
        res = minimize(
            lambda z: -lcb(model, z, kappa),
            samples[idx],
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxfev": 120, "xatol": 1e-4, "fatol": 1e-8, "disp": False},
        )
        if np.isfinite(res.fun) and -res.fun > best_val:
            best_x = np.clip(res.x, box.lower, box.upper)
            best_val = -float(res.fun)
    return box.clip(best_x)

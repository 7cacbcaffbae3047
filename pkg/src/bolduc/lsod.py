"""Local subset-of-data extraction for subspace-restricted surrogates.

The contribution of an observed point to the active search region is its
maximum kernel similarity to any point of that region. For kernels that
decay monotonically with Euclidean distance, maximizing similarity over the
(unclipped) subspace reduces to evaluating the kernel at the orthogonal
projection distance, so extraction never touches a kernel exponential:
sorting and thresholding happen on projection distances.

Three strategies are provided: keep the ``m`` highest contributors, keep
everything within distance ``tau`` of the subspace, or keep the shortest
contribution-sorted prefix whose share of the total contribution reaches
``c``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyHistoryError
from .gpr import Dataset
from .kernels import KernelConfig, similarity_from_scaled_sqdist
from .subspace import (
    Box,
    Subspace,
    embed,
    feasible_line_interval,
    is_feasible,
)

STRATEGY_NONE = "none"
STRATEGY_TOP_M = "topm"
STRATEGY_TAU = "tau"
STRATEGY_CUMULATIVE = "cumulative"

_STRATEGIES = (STRATEGY_NONE, STRATEGY_TOP_M, STRATEGY_TAU, STRATEGY_CUMULATIVE)


@dataclass(frozen=True)
class LsodConfig:
    """Which extraction strategy runs, and its single parameter.

    ``tau_decay`` optionally shrinks the distance threshold geometrically
    with the subspace epoch (coarse first, fine later); the default of 1.0
    keeps it constant. ``use_approximation`` switches between the projection
    shortcut (default) and the exact clipped-region maximization, which
    exists mainly as a test oracle.
    """

    strategy: str = STRATEGY_NONE
    m: int | None = None
    tau: float | None = None
    tau_decay: float = 1.0
    c: float | None = None
    use_approximation: bool = True

    def __post_init__(self):
        if self.strategy not in _STRATEGIES:
            raise ValueError(f"unknown extraction strategy {self.strategy!r}")
        if self.strategy == STRATEGY_TOP_M:
            if self.m is None or self.m < 1:
                raise ValueError("topm strategy requires m >= 1")
        if self.strategy == STRATEGY_TAU:
            if self.tau is None or self.tau < 0.0:
                raise ValueError("tau strategy requires tau >= 0")
            if not 0.0 < self.tau_decay <= 1.0:
                raise ValueError("tau_decay must lie in (0, 1]")
        if self.strategy == STRATEGY_CUMULATIVE:
            if self.c is None or not 0.0 <= self.c <= 1.0:
                raise ValueError("cumulative strategy requires c in [0, 1]")

    def effective_tau(self, epoch: int) -> float:
        """Distance threshold at the given subspace epoch."""
        if self.tau is None:
            raise ValueError("no tau configured")
        return self.tau * self.tau_decay**epoch


def _scaled_residual_distances(
    sub: Subspace, points: np.ndarray, cfg: KernelConfig | None
) -> np.ndarray:
    """Projection distances, in length-scale units when ``cfg`` is ARD.

    For an ARD config every coordinate is divided by its length scale and
    the basis is re-orthonormalized in the scaled space before projecting.
    Isotropic configs (or ``cfg=None``) project in the original space.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    anchor, basis = sub.anchor, sub.basis
    if cfg is not None and cfg.ard:
        ls = cfg.length_scales_for(anchor.size)
        points = points / ls
        anchor = anchor / ls
        basis, _ = np.linalg.qr(basis / ls[:, None])
    diffs = points - anchor
    resid = diffs - (diffs @ basis) @ basis.T
    return np.linalg.norm(resid, axis=1)


def contribution_batch(
    sub: Subspace,
    box: Box,
    cfg: KernelConfig,
    points,
    use_approximation: bool = True,
    grid_points: int = 256,
) -> np.ndarray:
    """Contribution of each row of ``points`` to the search region.

    With the approximation this is the kernel evaluated at the orthogonal
    projection distance (clipping against the box is ignored); without it,
    the similarity is maximized over a dense grid of the clipped region.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if use_approximation:
        if cfg.ard:
            d = _scaled_residual_distances(sub, points, cfg)
            return similarity_from_scaled_sqdist(cfg, d**2)
        d = _scaled_residual_distances(sub, points, None)
        ell = float(np.asarray(cfg.length_scale))
        return similarity_from_scaled_sqdist(cfg, (d / ell) ** 2)
    return np.array(
        [_grid_max_similarity(sub, box, cfg, p, grid_points) for p in points]
    )


def contribution(
    sub: Subspace,
    box: Box,
    cfg: KernelConfig,
    x,
    use_approximation: bool = True,
    grid_points: int = 256,
) -> float:
    """Contribution of a single observed point to the search region."""
    return float(
        contribution_batch(sub, box, cfg, [x], use_approximation, grid_points)[0]
    )


def _grid_max_similarity(
    sub: Subspace, box: Box, cfg: KernelConfig, x, grid_points: int
) -> float:
    """Exact contribution: max similarity over a grid of the clipped region."""
    if sub.dim == 1:
        lo, hi = feasible_line_interval(sub, box)
        alphas = np.linspace(lo, hi, grid_points)
        candidates = sub.anchor[None, :] + alphas[:, None] * sub.basis[:, 0][None, :]
    elif sub.dim == 2:
        half = box.chord
        g = np.linspace(-half, half, grid_points)
        la, lb = np.meshgrid(g, g, indexing="ij")
        locals_ = np.column_stack([la.ravel(), lb.ravel()])
        candidates = sub.anchor[None, :] + locals_ @ sub.basis.T
        inside = np.all(
            (candidates >= box.lower) & (candidates <= box.upper), axis=1
        )
        candidates = candidates[inside]
        if candidates.shape[0] == 0:
            candidates = sub.anchor[None, :]
    else:
        raise ValueError("exact contribution grids support d <= 2 only")
    x = np.asarray(x, dtype=float)
    ls = cfg.length_scales_for(x.size)
    diffs = (candidates - x) / ls
    s2 = np.einsum("ij,ij->i", diffs, diffs)
    return float(np.max(similarity_from_scaled_sqdist(cfg, s2)))


def extract_top_m(
    data: Dataset,
    sub: Subspace,
    box: Box,
    cfg: KernelConfig,
    m: int,
    use_approximation: bool = True,
) -> Dataset:
    """The ``m`` samples with the highest contribution to the region.

    Returns ``data`` unchanged when ``m >= len(data)``. Ties break toward
    the earlier observation; the result keeps the original observation
    order.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m >= len(data):
        return data
    contrib = contribution_batch(sub, box, cfg, data.points, use_approximation)
    order = np.argsort(-contrib, kind="stable")
    return data.subset(np.sort(order[:m]))


def extract_tau(
    data: Dataset, sub: Subspace, tau: float, cfg: KernelConfig | None = None
) -> Dataset:
    """Samples within projection distance ``tau`` of the subspace.

    ``cfg`` only matters for ARD kernels, where distances are measured in
    length-scale units.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    dists = _scaled_residual_distances(sub, data.points, cfg)
    keep = np.flatnonzero(dists <= tau)
    return data.subset(keep)


def extract_cumulative(
    data: Dataset,
    sub: Subspace,
    box: Box,
    cfg: KernelConfig,
    c: float,
    use_approximation: bool = True,
) -> Dataset:
    """Shortest contribution-sorted prefix reaching a share ``c`` of the total.

    Samples are ranked by descending contribution; the result is the first
    ``h >= 1`` of them whose cumulative contribution fraction reaches ``c``,
    returned in original observation order.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError("c must lie in [0, 1]")
    if len(data) < 1:
        raise ValueError("extract_cumulative needs at least one sample")
    contrib = contribution_batch(sub, box, cfg, data.points, use_approximation)
    order = np.argsort(-contrib, kind="stable")
    csum = np.cumsum(contrib[order])
    total = csum[-1]
    if total <= 0.0:
        warnings.warn(
            "all contributions vanished numerically; keeping the single "
            "nearest sample",
            RuntimeWarning,
        )
        dists = _scaled_residual_distances(sub, data.points, cfg if cfg.ard else None)
        return data.subset([int(np.argmin(dists))])
    if c >= 1.0:
        # Contributions are strictly positive in exact arithmetic, so the
        # full set is the shortest prefix reaching the total; honoring that
        # here keeps the boundary case from dropping points whose
        # contributions merely underflowed.
        return data
    h = 1 + int(np.argmax(csum / total >= c))
    return data.subset(np.sort(order[:h]))


def extract_lsod(
    data: Dataset,
    sub: Subspace,
    box: Box,
    kernel_cfg: KernelConfig,
    cfg: LsodConfig,
    epoch: int = 0,
) -> Dataset:
    """Dispatch to the configured extraction strategy."""
    if cfg.strategy == STRATEGY_NONE:
        return data
    if cfg.strategy == STRATEGY_TOP_M:
        return extract_top_m(data, sub, box, kernel_cfg, cfg.m, cfg.use_approximation)
    if cfg.strategy == STRATEGY_TAU:
        return extract_tau(
            data,
            sub,
            cfg.effective_tau(epoch),
            cfg=kernel_cfg if kernel_cfg.ard else None,
        )
    return extract_cumulative(
        data, sub, box, kernel_cfg, cfg.c, cfg.use_approximation
    )


class HyperparamHistory:
    """Kernel configs recorded across iterations, newest last.

    Extraction at iteration t reuses the hyperparameters fitted at t - 1;
    the first entry comes from the initial data.
    """

    def __init__(self):
        self._configs: list[KernelConfig] = []

    def push(self, cfg: KernelConfig):
        self._configs.append(cfg)

    def __len__(self) -> int:
        return len(self._configs)


def select_extraction_hyperparams(history: HyperparamHistory) -> KernelConfig:
    """Hyperparameters to extract with: the most recently recorded config."""
    if len(history) == 0:
        raise EmptyHistoryError(
            "no hyperparameters recorded; estimate them from the initial data first"
        )
    return history._configs[-1]

"""Stationary kernel functions and their hyperparameter container.

Two families are provided, squared exponential and Matern 5/2. Both are
strictly decreasing in the Euclidean distance between their arguments,
which is the property the subset-extraction shortcut in :mod:`bolduc.lsod`
relies on (similarity thresholds and distance thresholds are then
interchangeable).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

SQUARED_EXPONENTIAL = "se"
MATERN52 = "matern52"

_FAMILIES = (SQUARED_EXPONENTIAL, MATERN52)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family plus hyperparameters.

    Parameters
    ----------
    family : str
        One of ``"se"`` (squared exponential) or ``"matern52"``.
    signal_std : float
        Signal standard deviation; the kernel value at distance zero is
        ``signal_std ** 2``.
    length_scale : float or array-like
        Single positive length scale, or one per input dimension when
        ``ard`` is true.
    ard : bool
        Automatic relevance determination: per-dimension length scales.
    """

    family: str = SQUARED_EXPONENTIAL
    signal_std: float = 1.0
    length_scale: float | np.ndarray = 1.0
    ard: bool = False

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.signal_std > 0.0:
            raise ValueError("signal_std must be positive")
        ls = np.asarray(self.length_scale, dtype=float)
        if self.ard:
            if ls.ndim != 1 or ls.size < 1:
                raise ValueError("ARD requires a 1-D vector of length scales")
        else:
            if ls.ndim != 0:
                raise ValueError("non-ARD config takes a scalar length scale")
        if not np.all(ls > 0.0):
            raise ValueError("every length-scale entry must be positive")

    def length_scales_for(self, dim: int) -> np.ndarray:
        """Length-scale vector of size ``dim`` (broadcast when isotropic)."""
        ls = np.asarray(self.length_scale, dtype=float)
        if self.ard:
            if ls.size != dim:
                raise ValueError(
                    f"ARD length-scale vector has size {ls.size}, expected {dim}"
                )
            return ls
        return np.full(dim, float(ls))

    def with_params(self, signal_std=None, length_scale=None) -> "KernelConfig":
        """Copy with replaced hyperparameters."""
        return dataclasses.replace(
            self,
            signal_std=self.signal_std if signal_std is None else signal_std,
            length_scale=self.length_scale if length_scale is None else length_scale,
        )


def _scaled_sqdist(cfg: KernelConfig, xi: np.ndarray, xj: np.ndarray) -> float:
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape:
        raise ValueError(f"point dimensions differ: {xi.shape} vs {xj.shape}")
    ls = cfg.length_scales_for(xi.size)
    d = (xi - xj) / ls
    return float(np.dot(d, d))


def similarity_from_scaled_sqdist(cfg: KernelConfig, s2):
    """Kernel value as a function of the length-scale-scaled squared distance.

    ``s2`` is ``sum(((xi - xj) / length_scale) ** 2)``; for isotropic configs
    this is ``(r / length_scale) ** 2``. Accepts scalars or arrays.
    """
    s2 = np.asarray(s2, dtype=float)
    var = cfg.signal_std**2
    if cfg.family == SQUARED_EXPONENTIAL:
        return var * np.exp(-0.5 * s2)
    # Matern 5/2 in terms of the scaled distance s = r / length_scale.
    s = np.sqrt(s2)
    a = math.sqrt(5.0) * s
    return var * (1.0 + a + (5.0 / 3.0) * s2) * np.exp(-a)


def eval_kernel(cfg: KernelConfig, xi, xj) -> float:
    """Kernel similarity ``k(xi, xj)``.

    Symmetric in its arguments, nonnegative, and equal to
    ``cfg.signal_std ** 2`` when ``xi == xj``.
    """
    return float(similarity_from_scaled_sqdist(cfg, _scaled_sqdist(cfg, xi, xj)))


def scaled_sqdist_matrix(cfg: KernelConfig, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
    """Pairwise scaled squared distances between rows of ``X`` and ``Z``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"point dimensions differ: {X.shape[1]} vs {Z.shape[1]}")
    ls = cfg.length_scales_for(X.shape[1])
    Xs = X / ls
    Zs = Z / ls
    # (a - b)^2 = a^2 + b^2 - 2ab, clipped against round-off negatives.
    sq = (
        np.sum(Xs**2, axis=1)[:, None]
        + np.sum(Zs**2, axis=1)[None, :]
        - 2.0 * (Xs @ Zs.T)
    )
    return np.maximum(sq, 0.0)


def kernel_matrix(cfg: KernelConfig, X) -> np.ndarray:
    """Symmetric Gram matrix ``K[i, j] = k(X[i], X[j])``.

    The diagonal is exactly ``signal_std ** 2`` and the result is positive
    semidefinite.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("kernel_matrix needs at least one point")
    K = similarity_from_scaled_sqdist(cfg, scaled_sqdist_matrix(cfg, X))
    # Enforce exact symmetry and diagonal despite float noise in the
    # broadcasted distance computation.
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, cfg.signal_std**2)
    return K


def cross_kernel(cfg: KernelConfig, X, Z) -> np.ndarray:
    """Cross-covariance matrix ``k(X[i], Z[j])``."""
    return similarity_from_scaled_sqdist(cfg, scaled_sqdist_matrix(cfg, X, Z))


def distance_to_similarity(cfg: KernelConfig, r):
    """Kernel value at Euclidean distance ``r`` for an isotropic config.

    Strictly decreasing in ``r`` with value ``signal_std ** 2`` at zero;
    this is the monotone map that converts distance thresholds into
    similarity thresholds and back. Accepts scalars or arrays.
    """
    if cfg.ard:
        raise ValueError(
            "distance_to_similarity is undefined for ARD kernels: "
            "no single isotropic distance map exists"
        )
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("distance must be nonnegative")
    s = r / float(np.asarray(cfg.length_scale))
    out = similarity_from_scaled_sqdist(cfg, s**2)
    return float(out) if out.ndim == 0 else out

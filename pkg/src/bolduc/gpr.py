"""Gaussian process regression on an explicit observation set.

The posterior mean and variance at a query point x are

    mean(x) = k(x)^T (K + sigma^2 I)^-1 y
    var(x)  = k(x, x) - k(x)^T (K + sigma^2 I)^-1 k(x)

computed through a Cholesky factorization of ``K + sigma^2 I``. Kernel
hyperparameters are chosen by maximizing the log marginal likelihood
(up to an additive constant)

    -log|K + sigma^2 I| - y^T (K + sigma^2 I)^-1 y

with a bounded derivative-free simplex search over log-parameters.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .exceptions import DegenerateSystemError
from .kernels import (
    KernelConfig,
    cross_kernel,
    kernel_matrix,
    scaled_sqdist_matrix,
    similarity_from_scaled_sqdist,
)

# Observations are treated as noiseless; this floor on the noise standard
# deviation guarantees a well-conditioned factorization.
JITTER_FLOOR = 1e-6

# Extra diagonal mass (relative to the signal variance) tried in order when
# the factorization fails at the requested noise level.
_JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


class Dataset:
    """Ordered, append-only set of observations ``(x_n, y_n)``.

    ``points`` is an ``(n, D)`` array and ``values`` an ``(n,)`` array; the
    row index is the observation order and is stable once assigned.
    ``append`` returns a new Dataset so fitted models never alias a growing
    buffer.
    """

    __slots__ = ("points", "values")

    def __init__(self, points, values):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(values, dtype=float).ravel()
        if points.shape[0] != values.shape[0]:
            raise ValueError(
                f"{points.shape[0]} points but {values.shape[0]} values"
            )
        self.points = points
        self.values = values

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def append(self, x, y) -> "Dataset":
        x = np.asarray(x, dtype=float).ravel()
        if len(self) and x.size != self.dim:
            raise ValueError(f"point has dimension {x.size}, expected {self.dim}")
        return Dataset(
            np.vstack([self.points, x[None, :]]),
            np.append(self.values, float(y)),
        )

    def subset(self, indices) -> "Dataset":
        """Rows ``indices`` in the given order."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.points[idx], self.values[idx])


@dataclass
class Posterior:
    """A fitted GPR model.

    ``chol`` is the lower Cholesky factor of ``K + sigma^2 I`` over the
    (possibly standardized) targets and ``weights`` solves
    ``(K + sigma^2 I) w = y_internal``. ``y_shift``/``y_scale`` undo the
    target standardization on the way out; they are identity for raw fits.
    """

    points: np.ndarray
    cfg: KernelConfig
    noise_std: float
    chol: np.ndarray
    weights: np.ndarray
    y_shift: float = 0.0
    y_scale: float = 1.0
    values: np.ndarray = field(default=None, repr=False)

    @property
    def n_train(self) -> int:
        return self.points.shape[0]

    def predict(self, x) -> tuple[float, float]:
        """Posterior mean and variance at a single point."""
        means, variances = self.predict_batch(np.asarray(x, dtype=float)[None, :])
        return float(means[0]), float(variances[0])

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and variances at the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.points.shape[1]:
            raise ValueError(
                f"query dimension {X.shape[1]} != training dimension "
                f"{self.points.shape[1]}"
            )
        k_cross = cross_kernel(self.cfg, self.points, X)
        means = k_cross.T @ self.weights
        v = solve_triangular(self.chol, k_cross, lower=True, check_finite=False)
        variances = self.cfg.signal_std**2 - np.sum(v**2, axis=0)
        np.maximum(variances, 0.0, out=variances)  # clamp round-off negatives
        return (
            self.y_shift + self.y_scale * means,
            self.y_scale**2 * variances,
        )


def _factorize(K: np.ndarray, noise_std: float, signal_var: float) -> np.ndarray:
    """Lower Cholesky factor of ``K + sigma^2 I``, escalating jitter on failure."""
    n = K.shape[0]
    for extra in _JITTER_LADDER:
        diag = noise_std**2 + extra * signal_var
        try:
            return cholesky(K + diag * np.eye(n), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise DegenerateSystemError(
        f"Cholesky factorization failed for a {n}x{n} system even after "
        f"jitter escalation (noise_std={noise_std:g})"
    )


def _standardization(values: np.ndarray) -> tuple[float, float]:
    shift = float(np.mean(values))
    scale = float(np.std(values))
    if scale < 1e-12:
        scale = 1.0
    return shift, scale


def fit_posterior(
    data: Dataset,
    cfg: KernelConfig,
    noise_std: float = 0.0,
    standardize: bool = False,
) -> Posterior:
    """Fit the GPR posterior on ``data``.

    ``noise_std`` is floored at :data:`JITTER_FLOOR`. With ``standardize``
    the targets are shifted/scaled to zero mean and unit variance before
    fitting (``noise_std`` then acts in standardized units) and predictions
    are mapped back.
    """
    if len(data) < 1:
        raise ValueError("fit_posterior needs at least one observation")
    if noise_std < 0.0:
        raise ValueError("noise_std must be nonnegative")
    shift, scale = _standardization(data.values) if standardize else (0.0, 1.0)
    y = (data.values - shift) / scale
    sigma = max(noise_std, JITTER_FLOOR)
    K = kernel_matrix(cfg, data.points)
    L = _factorize(K, sigma, cfg.signal_std**2)
    weights = cho_solve((L, True), y, check_finite=False)
    return Posterior(
        points=data.points.copy(),
        cfg=cfg,
        noise_std=sigma,
        chol=L,
        weights=weights,
        y_shift=shift,
        y_scale=scale,
        values=data.values.copy(),
    )


def log_marginal_likelihood(
    data: Dataset, cfg: KernelConfig, noise_std: float = 0.0
) -> float:
    """Log marginal likelihood of ``data`` under ``cfg``, constant dropped.

    Returns ``-log|K + sigma^2 I| - y^T (K + sigma^2 I)^-1 y`` evaluated
    through the Cholesky factor.
    """
    if len(data) < 1:
        raise ValueError("log_marginal_likelihood needs at least one observation")
    sigma = max(noise_std, JITTER_FLOOR)
    K = kernel_matrix(cfg, data.points)
    L = _factorize(K, sigma, cfg.signal_std**2)
    alpha = cho_solve((L, True), data.values, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -logdet - float(data.values @ alpha)


@dataclass(frozen=True)
class HyperparamBounds:
    """Box bounds in log-parameter space for the hyperparameter search."""

    log_signal_std: tuple[float, float] = (math.log(1e-3), math.log(1e3))
    log_length_scale: tuple[float, float] = (math.log(1e-3), math.log(10.0))


def _lml_from_scaled_sqdist(s2, values, cfg_eval, noise_std):
    """LML given precomputed scaled squared distances (generic path)."""
    K = similarity_from_scaled_sqdist(cfg_eval, s2)
    n = K.shape[0]
    sigma2 = noise_std**2
    try:
        L = cholesky(K + sigma2 * np.eye(n), lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return -np.inf
    alpha = cho_solve((L, True), values, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -logdet - float(values @ alpha)


class _IsotropicLml:
    """Allocation-free LML evaluations for isotropic kernels.

    Pairwise distances are fixed during a hyperparameter search, so each
    evaluation only rescales them, exponentiates in place into preallocated
    buffers, and factorizes. This runs hundreds of times per iteration of
    the optimization loops.
    """

    def __init__(self, family: str, points: np.ndarray, values: np.ndarray, noise_std: float):
        unit = KernelConfig(family, 1.0, 1.0, False)
        self.family = family
        # Fortran order lets LAPACK factorize the buffer without a copy.
        self.base_s2 = np.asfortranarray(scaled_sqdist_matrix(unit, points))
        self.base_s = np.sqrt(self.base_s2)
        self.values = values
        self.sigma2 = noise_std**2
        n = points.shape[0]
        self._K = np.empty((n, n), order="F")
        self._P = np.empty((n, n), order="F")
        self._Q = np.empty((n, n), order="F")
        self.n = n

    def __call__(self, signal_std: float, length_scale: float) -> float:
        K, n = self._K, self.n
        var = signal_std**2
        if self.family == "se":
            np.multiply(self.base_s2, -0.5 / length_scale**2, out=K)
            np.exp(K, out=K)
            K *= var
        else:  # matern52: var * (1 + a + a^2/3) * exp(-a), a = sqrt(5) r / l
            P, Q = self._P, self._Q
            np.multiply(self.base_s, math.sqrt(5.0) / length_scale, out=P)
            np.multiply(P, -1.0, out=K)
            np.exp(K, out=K)
            np.multiply(P, P, out=Q)
            Q *= 1.0 / 3.0
            Q += P
            Q += 1.0
            K *= Q
            K *= var
        np.fill_diagonal(K, var + self.sigma2)
        try:
            L = cholesky(K, lower=True, check_finite=False, overwrite_a=True)
        except np.linalg.LinAlgError:
            return -np.inf
        alpha = cho_solve((L, True), self.values, check_finite=False)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        return -logdet - float(self.values @ alpha)


def estimate_hyperparams(
    data: Dataset,
    cfg_template: KernelConfig,
    bounds: HyperparamBounds | None = None,
    n_starts: int = 3,
    max_evals: int = 200,
    noise_std: float = JITTER_FLOOR,
    seed: int = 0,
) -> KernelConfig:
    """Maximize the log marginal likelihood over (signal_std, length_scale).

    Runs a bounded Nelder-Mead search in log-parameter space from the
    template plus ``n_starts - 1`` seeded perturbations of it. The returned
    config scores at least as well as every start's initial config; if every
    evaluation fails numerically the template is returned with a warning.
    """
    if len(data) < 2:
        raise ValueError("estimate_hyperparams needs at least two observations")
    bounds = bounds or HyperparamBounds()
    dim = data.dim
    n_ls = dim if cfg_template.ard else 1

    lo = np.array([bounds.log_signal_std[0]] + [bounds.log_length_scale[0]] * n_ls)
    hi = np.array([bounds.log_signal_std[1]] + [bounds.log_length_scale[1]] * n_ls)

    # Pairwise distances are fixed across isotropic evaluations; only the
    # scale changes, so a buffer-reusing evaluator handles that case.
    fast_lml = None
    if not cfg_template.ard:
        fast_lml = _IsotropicLml(
            cfg_template.family, data.points, data.values, noise_std
        )

    def to_cfg(params: np.ndarray) -> KernelConfig:
        signal = math.exp(params[0])
        ls = np.exp(params[1:])
        return cfg_template.with_params(signal, ls if cfg_template.ard else float(ls[0]))

    def objective(params: np.ndarray) -> float:
        params = np.clip(params, lo, hi)
        if fast_lml is not None:
            return -fast_lml(math.exp(params[0]), math.exp(params[1]))
        cfg = to_cfg(params)
        s2 = scaled_sqdist_matrix(cfg, data.points)
        return -_lml_from_scaled_sqdist(s2, data.values, cfg, noise_std)

    template_ls = np.log(cfg_template.length_scales_for(dim)[:n_ls])
    x0 = np.clip(
        np.concatenate(([math.log(cfg_template.signal_std)], template_ls)), lo, hi
    )
    rng = np.random.default_rng(seed)
    starts = [x0]
    for _ in range(max(0, n_starts - 1)):
        starts.append(np.clip(x0 + rng.uniform(-1.5, 1.5, size=x0.size), lo, hi))

    best_params, best_val = None, np.inf
    for start in starts:
        f0 = objective(start)
        if f0 < best_val:
            best_params, best_val = start, f0
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={
                "maxfev": max_evals,
                "xatol": 1e-2,
                "fatol": 1e-3,
                "disp": False,
            },
        )
        if np.isfinite(result.fun) and result.fun < best_val:
            best_params, best_val = np.clip(result.x, lo, hi), result.fun
    if best_params is None or not np.isfinite(best_val):
        warnings.warn(
            "hyperparameter search failed numerically at every start; "
            "falling back to the template config",
            RuntimeWarning,
        )
        return cfg_template
    return to_cfg(best_params)


def estimate_standardized(
    data: Dataset,
    cfg_template: KernelConfig,
    bounds: HyperparamBounds | None = None,
    n_starts: int = 3,
    max_evals: int = 200,
    noise_std: float = JITTER_FLOOR,
) -> KernelConfig:
    """Hyperparameter search on targets standardized to zero mean, unit variance."""
    shift, scale = _standardization(data.values)
    std_data = Dataset(data.points, (data.values - shift) / scale)
    return estimate_hyperparams(
        std_data,
        cfg_template,
        bounds=bounds,
        n_starts=n_starts,
        max_evals=max_evals,
        noise_std=noise_std,
    )


def fit_surrogate(
    data: Dataset,
    cfg_template: KernelConfig,
    noise_std: float = JITTER_FLOOR,
    estimate: bool = True,
    bounds: HyperparamBounds | None = None,
    n_starts: int = 3,
    max_evals: int = 200,
) -> tuple[Posterior, KernelConfig, float]:
    """Standardize targets, optionally re-estimate hyperparameters, and fit.

    This is the per-iteration surrogate construction used by the optimizer
    loops: estimation runs on the standardized targets so the default bounds
    stay scale-free. Returns ``(posterior, fitted_config, fit_seconds)``
    where the timing covers estimation plus factorization.
    """
    t0 = time.perf_counter()
    if estimate and len(data) >= 2:
        cfg = estimate_standardized(
            data,
            cfg_template,
            bounds=bounds,
            n_starts=n_starts,
            max_evals=max_evals,
            noise_std=noise_std,
        )
    else:
        cfg = cfg_template
    model = fit_posterior(data, cfg, noise_std, standardize=True)
    return model, cfg, time.perf_counter() - t0

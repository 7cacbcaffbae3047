"""Sequential optimization loops: full-space, subspace, and subspace+LSoD.

All three share the same skeleton: evaluate an initial design, then
repeatedly fit a surrogate, maximize the acquisition over the active search
region, and observe the suggested query. They differ in what the region is
(the whole box vs a low-dimensional affine subspace through the incumbent)
and in which observations train the surrogate (everything vs the local
subset extracted for the active subspace).

Subspaces are rebuilt either after a fixed number of observations
(``switch_multiplier * subspace_dim``) or as soon as a suggested query
collapses onto the incumbent.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import gpr
from .acquisition import AcquisitionConfig, maximize_full_space, maximize_over_region
from .kernels import KernelConfig
from .lsod import (
    HyperparamHistory,
    LsodConfig,
    extract_lsod,
    select_extraction_hyperparams,
)
from .subspace import Box, Subspace, make_coordinate_line, make_random_plane

INIT_RANDOM = "random"
INIT_SOBOL = "sobol"

METHOD_STANDARD = "standard"
METHOD_BOLD = "bold"
METHOD_BOLDUC = "bolduc"


@dataclass(frozen=True)
class RunConfig:
    """Everything one optimization run needs besides the objective and box.

    ``subspace_dim`` 0 means full-space search (no subspaces); 1 gives
    cyclic coordinate lines; 2 gives planes spanned by the cyclic axis and a
    random direction. ``estimate_hyperparams`` exists so synthetic cost
    measurements can pin the kernel; leave it on for real runs.
    """

    budget: int
    n_init: int
    subspace_dim: int = 1
    switch_multiplier: int = 5
    kernel: KernelConfig = field(default_factory=KernelConfig)
    lsod: LsodConfig = field(default_factory=LsodConfig)
    acq: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    seed: int = 0
    init_scheme: str = INIT_RANDOM
    stagnation_eps: float = 1e-3
    noise_std: float = gpr.JITTER_FLOOR
    estimate_hyperparams: bool = True

    def __post_init__(self):
        if not self.budget >= self.n_init >= 1:
            raise ValueError("need budget >= n_init >= 1")
        if self.subspace_dim < 0:
            raise ValueError("subspace_dim must be >= 0")
        if self.switch_multiplier < 1:
            raise ValueError("switch_multiplier must be >= 1")
        if self.init_scheme not in (INIT_RANDOM, INIT_SOBOL):
            raise ValueError(f"unknown init scheme {self.init_scheme!r}")
        if self.stagnation_eps < 0.0:
            raise ValueError("stagnation_eps must be nonnegative")


@dataclass
class TraceRecord:
    """One observation: the query, its value, and the loop state behind it.

    ``t`` counts observations starting at 1. Initial-design rows carry no
    surrogate metadata (``lsod_size`` 0, NaN hyperparameters, subspace -1).
    ``fit_ms`` isolates surrogate construction from ``elapsed_ms``.
    """

    t: int
    x: np.ndarray
    y: float
    best_y: float
    best_index: int
    lsod_size: int = 0
    theta_l: float = math.nan
    theta_sigma: float = math.nan
    subspace_id: int = -1
    elapsed_ms: float = 0.0
    fit_ms: float = 0.0


@dataclass
class SubspaceEpoch:
    """A subspace together with the observation count at its creation."""

    subspace: Subspace
    created_at: int


@dataclass
class Trace:
    """Complete run record: per-observation rows plus the subspace registry."""

    records: list[TraceRecord] = field(default_factory=list)
    subspaces: list[SubspaceEpoch] = field(default_factory=list)
    error: str | None = None

    @property
    def final_index(self) -> int:
        """0-based index of the incumbent among all observations."""
        if not self.records:
            raise ValueError("empty trace")
        return self.records[-1].best_index

    @property
    def final_x(self) -> np.ndarray:
        return self.records[self.final_index].x

    @property
    def final_value(self) -> float:
        return self.records[-1].best_y

    def subspace_by_id(self, subspace_id: int) -> Subspace:
        for epoch in self.subspaces:
            if epoch.subspace.id == subspace_id:
                return epoch.subspace
        raise KeyError(f"no subspace with id {subspace_id}")


@dataclass
class SwitchState:
    """Inputs to the switching decision.

    ``incumbent`` is the best point at the moment ``last_query`` was
    suggested (before observing it), so an improving query still registers
    as stagnation when it lands on top of the previous best.
    """

    obs_since_switch: int
    last_query: np.ndarray | None
    incumbent: np.ndarray | None


def should_switch(state: SwitchState, cfg: RunConfig) -> bool:
    """Switch on epoch exhaustion or when queries collapse onto the incumbent."""
    if state.obs_since_switch >= cfg.switch_multiplier * max(cfg.subspace_dim, 1):
        return True
    if state.last_query is not None and state.incumbent is not None:
        if np.linalg.norm(state.last_query - state.incumbent) < cfg.stagnation_eps:
            return True
    return False


def best_point(data: gpr.Dataset) -> tuple[int, np.ndarray, float]:
    """Index, location, and value of the lowest observation (ties: earliest)."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    idx = int(np.argmin(data.values))
    return idx, data.points[idx], float(data.values[idx])


def init_design(
    box: Box,
    n: int,
    scheme: str = INIT_RANDOM,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """``n`` starting points inside the box.

    ``random`` draws uniformly from ``rng`` (or a generator seeded with
    ``seed``); ``sobol`` uses the unscrambled Sobol sequence including its
    initial corner point, mapped affinely into the box.
    """
    if n < 1:
        raise ValueError("need at least one initial point")
    if scheme == INIT_RANDOM:
        if rng is None:
            rng = np.random.default_rng(seed)
        return rng.uniform(box.lower, box.upper, size=(n, box.dim))
    if scheme == INIT_SOBOL:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            u = qmc.Sobol(d=box.dim, scramble=False).random(n)
        return box.lower + u * (box.upper - box.lower)
    raise ValueError(f"unknown init scheme {scheme!r}")


def run_standard_bo(objective, box: Box, cfg: RunConfig) -> Trace:
    """Full-space loop: fit on everything, maximize over the whole box."""
    if cfg.subspace_dim != 0:
        raise ValueError("standard BO requires subspace_dim == 0")
    return _run(objective, box, cfg, METHOD_STANDARD)


def run_bold(objective, box: Box, cfg: RunConfig) -> Trace:
    """Subspace loop with a global surrogate fit on all observations."""
    _check_subspace_dim(cfg, box)
    return _run(objective, box, cfg, METHOD_BOLD)


def run_bolduc(objective, box: Box, cfg: RunConfig) -> Trace:
    """Subspace loop with a local surrogate fit on the extracted subset."""
    _check_subspace_dim(cfg, box)
    if cfg.lsod.strategy == "none":
        raise ValueError("run_bolduc needs an extraction strategy")
    return _run(objective, box, cfg, METHOD_BOLDUC)


def _check_subspace_dim(cfg: RunConfig, box: Box):
    if not 1 <= cfg.subspace_dim < box.dim:
        raise ValueError("need 1 <= subspace_dim < D")
    if cfg.subspace_dim > 2:
        raise ValueError("only line (1) and plane (2) subspaces are provided")
    if cfg.subspace_dim == 2 and box.dim < 3:
        raise ValueError("plane subspaces require D >= 3")


def _theta_scalar(cfg: KernelConfig) -> float:
    """Scalar length-scale summary for traces (geometric mean under ARD)."""
    ls = np.asarray(cfg.length_scale, dtype=float)
    if ls.ndim == 0:
        return float(ls)
    return float(np.exp(np.mean(np.log(ls))))


def _run(objective, box: Box, cfg: RunConfig, method: str) -> Trace:
    rng = np.random.default_rng(cfg.seed)
    trace = Trace()

    X0 = init_design(box, cfg.n_init, cfg.init_scheme, rng=rng)
    xs: list[np.ndarray] = []
    ys: list[float] = []
    best_idx, best_x, best_y = -1, None, math.inf
    for i, x in enumerate(X0):
        tic = time.perf_counter()
        try:
            y = float(objective(x))
        except Exception as exc:  # partial trace on objective failure
            trace.error = f"objective failed at observation {i + 1}: {exc}"
            return trace
        xs.append(np.asarray(x, dtype=float))
        ys.append(y)
        if y < best_y:
            best_idx, best_x, best_y = i, xs[-1], y
        trace.records.append(
            TraceRecord(
                t=i + 1,
                x=xs[-1],
                y=y,
                best_y=best_y,
                best_index=best_idx,
                elapsed_ms=(time.perf_counter() - tic) * 1e3,
            )
        )
    data = gpr.Dataset(np.vstack(xs), np.asarray(ys))

    history = HyperparamHistory()
    sub: Subspace | None = None
    axis_counter = 0
    obs_since_switch = 0
    last_query: np.ndarray | None = None
    last_incumbent: np.ndarray | None = None

    for t in range(cfg.n_init, cfg.budget):
        tic = time.perf_counter()

        if method != METHOD_STANDARD:
            state = SwitchState(obs_since_switch, last_query, last_incumbent)
            if sub is None or should_switch(state, cfg):
                next_id = sub.id + 1 if sub is not None else 0
                axis = axis_counter % box.dim
                axis_counter += 1
                if cfg.subspace_dim == 1:
                    sub = make_coordinate_line(best_x, axis, next_id)
                else:
                    sub = make_random_plane(best_x, axis, rng, next_id)
                trace.subspaces.append(SubspaceEpoch(sub, created_at=t))
                obs_since_switch = 0
                last_query = None

        if method == METHOD_BOLDUC:
            if len(history) == 0:
                # Hyperparameters for the very first extraction come from
                # the initial data; afterwards the previous fit is reused.
                if cfg.estimate_hyperparams:
                    history.push(gpr.estimate_standardized(data, cfg.kernel))
                else:
                    history.push(cfg.kernel)
            extraction_cfg = select_extraction_hyperparams(history)
            fit_data = extract_lsod(
                data, sub, box, extraction_cfg, cfg.lsod, epoch=sub.id
            )
        else:
            fit_data = data

        model, fitted_cfg, fit_s = gpr.fit_surrogate(
            fit_data,
            cfg.kernel,
            noise_std=cfg.noise_std,
            estimate=cfg.estimate_hyperparams,
        )
        if method == METHOD_BOLDUC:
            history.push(fitted_cfg)

        kappa_t = cfg.acq.kappa_at(t)
        if method == METHOD_STANDARD:
            x_next = maximize_full_space(model, box, cfg.acq, rng, kappa=kappa_t)
        else:
            x_next = maximize_over_region(model, sub, box, cfg.acq, kappa=kappa_t)
        last_query = x_next
        last_incumbent = best_x

        try:
            y_next = float(objective(x_next))
        except Exception as exc:
            trace.error = f"objective failed at observation {t + 1}: {exc}"
            return trace

        data = data.append(x_next, y_next)
        obs_since_switch += 1
        if y_next < best_y:
            best_idx, best_x, best_y = t, data.points[t], y_next
        trace.records.append(
            TraceRecord(
                t=t + 1,
                x=data.points[t],
                y=y_next,
                best_y=best_y,
                best_index=best_idx,
                lsod_size=len(fit_data),
                theta_l=_theta_scalar(fitted_cfg),
                theta_sigma=float(fitted_cfg.signal_std),
                subspace_id=sub.id if sub is not None else -1,
                elapsed_ms=(time.perf_counter() - tic) * 1e3,
                fit_ms=fit_s * 1e3,
            )
        )
    return trace

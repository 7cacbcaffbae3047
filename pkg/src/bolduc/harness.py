"""Experiment runner: CLI parsing, multi-trial execution, CSV emission.

One experiment = one objective, one method, ``trials`` independent runs
with seeds ``base_seed + trial``. Every observation becomes one CSV row;
a companion ``<out>.summary.csv`` aggregates the mean and standard
deviation of the log regret per observation count across trials.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from .acquisition import AcquisitionConfig
from .external import ExternalObjective
from .kernels import KernelConfig
from .lsod import LsodConfig
from .optimizer import (
    METHOD_BOLD,
    METHOD_BOLDUC,
    METHOD_STANDARD,
    RunConfig,
    Trace,
    run_bold,
    run_bolduc,
    run_standard_bo,
)
from .subspace import Box

_FUNCTIONS = ("ackley", "rosenbrock", "external")
_METHODS = (METHOD_STANDARD, METHOD_BOLD, METHOD_BOLDUC)

FIXED_COLUMNS = [
    "trial",
    "t",
    "method",
    "y",
    "best_y",
    "simple_regret",
    "log_regret",
    "lsod_size",
    "theta_l",
    "theta_sigma",
    "subspace_id",
    "elapsed_ms",
]

SUMMARY_COLUMNS = ["method", "t", "mean_log_regret", "std_log_regret"]


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment description; maps one-to-one onto the CLI flags."""

    function: str
    dimension: int
    budget: int
    n_init: int
    method: str
    out: str
    subspace_dim: int = 1
    switch_multiplier: int = 5
    strategy: str = "none"
    m: int | None = None
    tau: float | None = None
    ct: float | None = None
    kernel: str = "se"
    ard: bool = False
    kappa: float = 2.0
    trials: int = 1
    seed: int = 0
    jobs: int = 1
    init_scheme: str = "random"
    shared_init: bool = True
    stagnation_eps: float = 1e-3
    estimate_hyperparams: bool = True
    deterministic_timing: bool = False
    plot: bool = False
    external_cmd: str | None = None
    external_bounds: tuple | None = None
    external_optimum: float = 0.0
    external_timeout: float = 3600.0

    def __post_init__(self):
        if self.function not in _FUNCTIONS:
            raise ValueError(f"unknown function {self.function!r}")
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.function == "rosenbrock" and self.dimension < 2:
            raise ValueError("rosenbrock requires dimension >= 2")
        if self.function == "external" and not self.external_cmd:
            raise ValueError("function=external requires an external command")
        if self.method == METHOD_BOLDUC and self.strategy == "none":
            raise ValueError("method=bolduc requires a --strategy")

    def run_config(self, trial: int) -> RunConfig:
        dim = self.dimension
        kernel = KernelConfig(
            family=self.kernel,
            signal_std=1.0,
            length_scale=np.ones(dim) if self.ard else 1.0,
            ard=self.ard,
        )
        lsod = LsodConfig(strategy=self.strategy, m=self.m, tau=self.tau, c=self.ct)
        acq = AcquisitionConfig(kappa=self.kappa)
        return RunConfig(
            budget=self.budget,
            n_init=self.n_init,
            subspace_dim=0 if self.method == METHOD_STANDARD else self.subspace_dim,
            switch_multiplier=self.switch_multiplier,
            kernel=kernel,
            lsod=lsod,
            acq=acq,
            seed=self.trial_seed(trial),
            init_scheme=self.init_scheme,
            stagnation_eps=self.stagnation_eps,
            estimate_hyperparams=self.estimate_hyperparams,
        )

    def trial_seed(self, trial: int) -> int:
        base = self.seed + trial
        if self.shared_init:
            return base
        # Decorrelate initial designs across methods when sharing is off.
        return base + 1_000_003 * (1 + _METHODS.index(self.method))


@dataclass
class ExperimentResult:
    csv_path: Path
    summary_path: Path
    trials: int
    failures: list[tuple[int, str]]
    final_regrets: dict[int, float]

    @property
    def ok(self) -> bool:
        return not self.failures


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _run_method(objective, box: Box, run_cfg: RunConfig, method: str) -> Trace:
    if method == METHOD_STANDARD:
        return run_standard_bo(objective, box, run_cfg)
    if method == METHOD_BOLD:
        return run_bold(objective, box, run_cfg)
    return run_bolduc(objective, box, run_cfg)


def _trial_rows(cfg: ExperimentConfig, trial: int) -> tuple[list[list[str]], str | None]:
    """Run one trial and format its trace as CSV cells."""
    box = bm.normalized_box(cfg.dimension)
    run_cfg = cfg.run_config(trial)

    if cfg.function == "external":
        optimum = cfg.external_optimum
        if cfg.external_bounds is not None:
            lower = np.asarray(cfg.external_bounds[0], dtype=float)
            upper = np.asarray(cfg.external_bounds[1], dtype=float)
        else:
            lower, upper = box.lower, box.upper

        with ExternalObjective(cfg.external_cmd, timeout=cfg.external_timeout) as ext:
            objective = lambda xn: ext(lower + (xn + 0.5) * (upper - lower))
            trace = _run_method(objective, box, run_cfg, cfg.method)
    else:
        bench = bm.get_benchmark(cfg.function, cfg.dimension)
        optimum = bench.optimum_value
        trace = _run_method(bm.make_objective(bench), box, run_cfg, cfg.method)

    rows = []
    for rec in trace.records:
        regret = rec.best_y - optimum
        if regret >= 0.0:
            lr = bm.log_regret(max(regret, 0.0))
        else:
            lr = math.nan
        elapsed = 0.0 if cfg.deterministic_timing else rec.elapsed_ms
        cells = [
            str(trial),
            str(rec.t),
            cfg.method,
            _fmt(rec.y),
            _fmt(rec.best_y),
            _fmt(max(regret, 0.0) if regret >= 0.0 else regret),
            _fmt(lr),
            str(rec.lsod_size),
            _fmt(rec.theta_l),
            _fmt(rec.theta_sigma),
            str(rec.subspace_id),
            _fmt(elapsed),
        ]
        cells.extend(_fmt(float(v)) for v in rec.x)
        rows.append(cells)
    return rows, trace.error


def _trial_worker(cfg_dict: dict, trial: int):
    cfg = ExperimentConfig(**cfg_dict)
    rows, error = _trial_rows(cfg, trial)
    return trial, rows, error


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all trials, write the trace CSV and the per-t summary CSV."""
    header = FIXED_COLUMNS + [f"x_{d + 1}" for d in range(cfg.dimension)]

    results: dict[int, tuple[list[list[str]], str | None]] = {}
    if cfg.jobs > 1 and cfg.trials > 1:
        cfg_dict = dataclasses.asdict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [
                pool.submit(_trial_worker, cfg_dict, trial)
                for trial in range(cfg.trials)
            ]
            for fut in futures:
                trial, rows, error = fut.result()
                results[trial] = (rows, error)
    else:
        for trial in range(cfg.trials):
            results[trial] = _trial_rows(cfg, trial)

    failures = []
    final_regrets = {}
    out_path = Path(cfg.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for trial in range(cfg.trials):
            rows, error = results[trial]
            for cells in rows:
                fh.write(",".join(cells) + "\n")
            if error is not None:
                failures.append((trial, error))
            if rows:
                final_regrets[trial] = float(rows[-1][5])

    summary_path = _write_summary(out_path, cfg.method, results)
    return ExperimentResult(
        csv_path=out_path,
        summary_path=summary_path,
        trials=cfg.trials,
        failures=failures,
        final_regrets=final_regrets,
    )


def _write_summary(out_path: Path, method: str, results) -> Path:
    by_t: dict[int, list[float]] = {}
    for rows, _error in results.values():
        for cells in rows:
            by_t.setdefault(int(cells[1]), []).append(float(cells[6]))
    summary_path = out_path.with_name(out_path.name + ".summary.csv")
    with summary_path.open("w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for t in sorted(by_t):
            vals = np.asarray(by_t[t])
            fh.write(
                ",".join(
                    [method, str(t), _fmt(float(np.mean(vals))), _fmt(float(np.std(vals)))]
                )
                + "\n"
            )
    return summary_path


def parse_cli(argv=None) -> ExperimentConfig:
    """Map CLI flags (optionally layered over a JSON config file) to a config."""
    parser = argparse.ArgumentParser(
        prog="bolduc",
        description=(
            "Subspace-restricted Bayesian optimization with local GPR "
            "surrogates; writes one CSV row per observation plus a summary."
        ),
    )
    add = parser.add_argument
    add("--function", choices=_FUNCTIONS)
    add("--dim", dest="dimension", type=int)
    add("--budget", type=int)
    add("--init", dest="n_init", type=int)
    add("--method", choices=_METHODS)
    add("--subspace-dim", dest="subspace_dim", type=int)
    add("--switch-every", dest="switch_multiplier", type=int)
    add("--strategy", choices=("none", "topm", "tau", "cumulative"))
    add("--m", type=int)
    add("--tau", type=float)
    add("--ct", type=float)
    add("--kernel", choices=("se", "matern52"))
    add("--ard", action="store_true", default=None)
    add("--kappa", type=float)
    add("--trials", type=int)
    add("--seed", type=int)
    add("--jobs", type=int)
    add("--init-scheme", dest="init_scheme", choices=("random", "sobol"))
    add("--shared-init", dest="shared_init", action=argparse.BooleanOptionalAction, default=None)
    add("--stagnation-eps", dest="stagnation_eps", type=float)
    add("--deterministic-timing", dest="deterministic_timing", action="store_true", default=None)
    add("--plot", action="store_true", default=None)
    add("--external-cmd", dest="external_cmd")
    add("--external-timeout", dest="external_timeout", type=float)
    add("--config", help="JSON file with ExperimentConfig fields; flags override")
    add("--out")
    args = vars(parser.parse_args(argv))

    config_path = args.pop("config", None)
    merged: dict = {}
    if config_path:
        try:
            with open(config_path) as fh:
                merged.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"could not read config file: {exc}")
    merged.update({k: v for k, v in args.items() if v is not None})

    for key in ("function", "dimension", "budget", "n_init", "method", "out"):
        if key not in merged:
            flag = {"dimension": "--dim", "n_init": "--init"}.get(key, f"--{key}")
            parser.error(f"missing required flag {flag}")
    if "external_bounds" in merged and merged["external_bounds"] is not None:
        lo, hi = merged["external_bounds"]
        merged["external_bounds"] = (list(lo), list(hi))
    try:
        return ExperimentConfig(**merged)
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))

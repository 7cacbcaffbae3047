"""Command-line entry point for running experiments."""

from __future__ import annotations

import sys

from .harness import parse_cli, run_experiment


def main(argv=None) -> int:
    cfg = parse_cli(argv)
    result = run_experiment(cfg)
    print(f"wrote {result.csv_path} and {result.summary_path}")
    for trial, regret in sorted(result.final_regrets.items()):
        print(f"trial {trial}: final simple regret {regret:.6g}")
    for trial, error in result.failures:
        print(f"trial {trial} FAILED: {error}", file=sys.stderr)
    if cfg.plot:
        from .plots import render_report

        prefix = result.csv_path.stem
        for path in render_report([result.csv_path], prefix=prefix):
            print(f"wrote {path}")
    return 1 if result.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())

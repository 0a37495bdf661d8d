"""Command-line front end.

::

    thermolam run CONFIG [--precision {double,dd,qd}] [--out DIR] [--plots]
    thermolam run CONFIG --check [--seed N]
    thermolam --check [--seed N]

Exit codes: 0 success, 2 configuration error, 3 failed point or invariant,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from ..errors import ConfigError
from .checks import run_checks
from .config import RunConfig, load_bundled, parse_config
from .runner import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, run


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermolam", description="Complex band structure of thermodiffusive laminates.")
    p.add_argument("--check", action="store_true", help="run the invariant suite only (no sweep)")
    p.add_argument("--seed", type=int, default=0, help="seed of the randomized self-tests")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run a sweep configuration")
    r.add_argument("config", help="JSON run configuration")
    r.add_argument("--precision", choices=("double", "dd", "qd"), help="override the base precision level")
    r.add_argument("--out", help="output directory (overrides outputs.dir)")
    r.add_argument("--plots", action="store_true", help="emit SVG plots")
    r.add_argument("--check", dest="run_check", action="store_true", help="invariant suite on this config")
    r.add_argument("--seed", dest="run_seed", type=int, default=None)
    return p


def _with_precision(cfg: RunConfig, level: str | None) -> RunConfig:
    return cfg if level is None else cfg.model_copy(update={"precision": level})


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    check = args.check or getattr(args, "run_check", False)
    seed = args.seed if getattr(args, "run_seed", None) is None else args.run_seed
    try:
        if args.command == "run":
            cfg = _with_precision(parse_config(args.config), args.precision)
        elif check:
            cfg = load_bundled()
        else:
            _parser().print_usage(sys.stderr)
            return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if check:
        results = run_checks(cfg, seed=seed)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC

    result = run(cfg, out_dir=args.out, plots=True if args.plots else None)
    if result.exit_code == EXIT_IO:
        print(f"I/O error: {result.manifest.get('error')}", file=sys.stderr)
        return EXIT_IO
    pts = result.manifest.get("points", {})
    print(
        f"{pts.get('evaluated', 0)} of {pts.get('requested', 0)} points evaluated, "
        f"{pts.get('failed', 0)} failed, "
        f"{len(result.manifest.get('invariant_violations', []))} invariant violations"
    )
    for path in result.written:
        print(f"wrote {path}")
    return result.exit_code


__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO"]

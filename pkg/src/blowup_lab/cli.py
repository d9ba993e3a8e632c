"""Command line entry point.

    blowup-lab run CONFIG [--out DIR] [--kind KIND] [--override sec.key=val ...]

Runs the experiment described by the INI file and writes deterministic
artifacts into the output directory: `report.json` (sorted keys), one CSV
per recorded table, the canonical effective configuration, and a
`MANIFEST.txt` with SHA-256 digests.  Nothing in the output depends on
wall clock, hostname, or thread count, so reruns are byte-identical.

Exit codes: 0 run completed and all checks passed; 1 run completed but a
check failed; 2 configuration or usage error; 3 numerical failure.

BLAS/OpenMP thread counts are pinned to 1 before numpy is first imported
(unless the caller already set them), since reduction order varies with
thread count and would break reproducibility.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _pin_threads() -> None:
    for var in _THREAD_VARS:
        os.environ.setdefault(var, "1")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blowup-lab",
        description="Numerical lab for profile-tracking blow-up in a perturbed "
        "semilinear heat equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from an INI config")
    run.add_argument("config", help="path to the INI configuration file")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument(
        "--kind",
        default=None,
        help="override [experiment] kind (spectral-checks, semigroup-checks, "
        "trajectory, shoot, physical, stability, full-pipeline)",
    )
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="SEC.KEY=VALUE",
        help="override a config value; repeatable",
    )
    return parser


def _json_default(obj):
    import numpy as np

    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _write_artifacts(out_dir: Path, cfg: dict, report: dict, tables: dict) -> None:
    from .config import config_hash, config_text

    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, bytes] = {}
    files["report.json"] = (
        json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    ).encode()
    files["config.txt"] = config_text(cfg).encode()
    for name, (header, rows) in sorted(tables.items()):
        lines = [",".join(str(h) for h in header)]
        lines.extend(",".join(str(cell) for cell in row) for row in rows)
        files[f"{name}.csv"] = ("\n".join(lines) + "\n").encode()

    manifest = [f"config {config_hash(cfg)}"]
    for name in sorted(files):
        digest = hashlib.sha256(files[name]).hexdigest()
        manifest.append(f"{digest}  {name}")
    files["MANIFEST.txt"] = ("\n".join(manifest) + "\n").encode()

    for name, blob in files.items():
        (out_dir / name).write_bytes(blob)


def main(argv: list[str] | None = None) -> int:
    _pin_threads()
    parser = _build_parser()
    args = parser.parse_args(argv)

    from .config import ConfigError, apply_overrides, load_config, validate_config

    try:
        cfg = load_config(args.config)
        apply_overrides(cfg, args.override)
        if args.kind is not None:
            apply_overrides(cfg, [f"experiment.kind={args.kind}"])
        validate_config(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    from .experiments import run_experiment
    from .solver import DivergenceError

    kind = cfg["experiment"]["kind"]
    print(f"running {kind} ...")
    try:
        report, tables, ok = run_experiment(cfg)
    except DivergenceError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except (FloatingPointError, RuntimeError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3

    out_dir = Path(args.out)
    _write_artifacts(out_dir, cfg, report, tables)
    n_files = len(tables) + 3
    print(f"wrote {n_files} files to {out_dir}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

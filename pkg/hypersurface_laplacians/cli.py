#!/usr/bin/env python3
"""
Command-line front end.

Commands:
  check            one surface/field/extension, selected identities (default: all admissible)
  suite            a YAML run config (geometry_specs/suites/*.yaml), flags override its keys
  list-identities  the catalog, optionally filtered by surface kind

Outputs:
  - per (identity, surface) summary on stdout
  - --out: JSON report (or summary CSV with --format csv)
  - --csv: plot table (identity, surface, t, residual)

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration/load error.

Usage:
  hypersurface-laplacians check --surface sphere --identity THM1 --points 50 --seed 7
  hypersurface-laplacians suite --config geometry_specs/suites/default.yaml --out out/report.json
  hypersurface-laplacians list-identities --surface-kind sphere --json
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .errors import ConfigError, HypersurfaceError
from .specs import RunConfig, load_run_config, resolve_extension, resolve_field, resolve_surface
from .verify import CATALOG_BY_ID, ResidualReport, compare_extensions, identities_for, run_suite

log = logging.getLogger("hypersurface_laplacians.cli")

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

__all__ = ["RunConfig", "build_parser", "list_identities", "main"]


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------
def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--identity", action="append", default=None, help="Catalog id (repeatable)")
    p.add_argument("--points", type=int, default=None, help="Sample points per combination")
    p.add_argument("--seed", type=int, default=None, help="Sampling seed")
    p.add_argument("--engine", default=None, help="jets | fd | both")
    p.add_argument("--tol", type=float, default=None, help="Override every base tolerance")
    p.add_argument("--workers", type=int, default=None, help="Threads per identity run")
    p.add_argument("--out", default=None, help="Report path")
    p.add_argument("--format", default=None, help="json | csv (report written to --out)")
    p.add_argument("--csv", default=None, help="Plot table path (identity, surface, t, residual)")


def _add_noise_flags(p: argparse.ArgumentParser, default: Any) -> None:
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--verbose", action="store_true", default=default, help="DEBUG logging (per-point residuals)")
    noise.add_argument("--quiet", action="store_true", default=default, help="Warnings and errors only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hypersurface-laplacians",
        description="Numerically verify Laplacian identities on hypersurfaces.",
    )
    _add_noise_flags(ap, False)
    # Subcommands accept the same flags; SUPPRESS keeps them from resetting the top-level values.
    common = argparse.ArgumentParser(add_help=False)
    _add_noise_flags(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Run identities on one surface/field/extension")
    check.add_argument("--surface", default="sphere", help="Builtin name or surface YAML")
    check.add_argument("--field", default="azimuthal", help="Builtin name or field YAML")
    check.add_argument("--extension", default="homogeneous:1", help="homogeneous:<k> | custom:<file>")
    check.add_argument(
        "--compare-extension",
        default=None,
        help="Second extension; adds the extension-dependence rows for --field",
    )
    _add_run_flags(check)

    suite = sub.add_parser("suite", parents=[common], help="Run a YAML run config")
    suite.add_argument("--config", required=True, help="Run config YAML")
    _add_run_flags(suite)

    listing = sub.add_parser("list-identities", parents=[common], help="Print the identity catalog")
    listing.add_argument("--surface-kind", default=None, help="sphere | ellipsoid | revolution | nsphere")
    listing.add_argument("--json", action="store_true", help="Machine-readable output")
    return ap


# -----------------------------------------------------------------------------
# Config assembly
# -----------------------------------------------------------------------------
def _apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Flags override config keys."""
    if args.identity is not None:
        cfg.identities = [i.upper() for i in args.identity]
    for key in ("points", "seed", "engine", "tol", "workers", "format"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.csv is not None:
        cfg.csv = Path(args.csv)
    cfg.validate(list(CATALOG_BY_ID))
    return cfg


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "suite":
        cfg = load_run_config(Path(args.config))
    else:
        cfg = RunConfig(surfaces=[args.surface], fields=[args.field], extensions=[args.extension])
    return _apply_flags(cfg, args)


# -----------------------------------------------------------------------------
# Output
# -----------------------------------------------------------------------------
def print_summary(report: ResidualReport) -> None:
    summary = report.summary()
    if summary.empty:
        print("No checks ran.")
        return
    print(f"\n{'identity':16s} {'surface':14s} {'rows':>5s} {'max residual':>13s} {'tol':>10s}  status")
    for row in summary.itertuples(index=False):
        status = "PASS" if row.failures == 0 else f"FAIL ({row.failures})"
        print(
            f"{row.identity:16s} {row.surface:14s} {row.rows:5d} "
            f"{row.max_residual:13.3e} {row.tol_at_max:10.2e}  {status}"
        )
    print(f"\nRows: {len(report.results)}  Failed: {len(report.failures)}")


def write_outputs(report: ResidualReport, cfg: RunConfig) -> None:
    if cfg.out is not None:
        if cfg.format == "csv":
            report.write_csv(cfg.out)
        else:
            report.write_json(cfg.out)
        log.info("Wrote report: %s", cfg.out)
    if cfg.csv is not None:
        report.write_plot_csv(cfg.csv)
        log.info("Wrote plot table: %s", cfg.csv)


def list_identities(surface_kind: Optional[str] = None, as_json: bool = False) -> List[Dict[str, Any]]:
    rows = [
        {
            "id": c.id,
            "title": c.title,
            "surface_kinds": list(c.kinds),
            "needs_field": c.needs_field,
            "needs_divfree": c.needs_divfree,
            "tolerance": c.tolerance_key,
            "fd_route": c.fd is not None,
        }
        for c in identities_for(surface_kind)
    ]
    if as_json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            flags = "div-free" if r["needs_divfree"] else ("field" if r["needs_field"] else "scalar")
            print(f"{r['id']:16s} {','.join(r['surface_kinds']):34s} {flags:9s} {r['title']}")
        print(f"\n{len(rows)} identities")
    return rows


# -----------------------------------------------------------------------------
# Entry point
# -----------------------------------------------------------------------------
def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    if args.command == "list-identities":
        list_identities(args.surface_kind, args.json)
        return 0

    try:
        cfg = config_from_args(args)
        start = time.perf_counter()
        report = run_suite(cfg)
        if args.command == "check" and args.compare_extension:
            extra = compare_extensions(
                resolve_surface(args.surface),
                resolve_field(args.field),
                resolve_extension(args.extension),
                resolve_extension(args.compare_extension),
                points=cfg.points,
                seed=cfg.seed,
            )
            report.extend(extra.results)
        log.info("Finished in %.2fs", time.perf_counter() - start)
        write_outputs(report, cfg)
    except ConfigError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2
    except HypersurfaceError as exc:
        print(f"ERROR: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    print_summary(report)
    if not report.passed:
        print("\nSome identities exceeded their tolerance; see the report for per-term values.")
        return 1
    print("\nOK: every identity holds within tolerance.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

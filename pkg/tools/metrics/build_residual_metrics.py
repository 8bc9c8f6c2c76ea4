#!/usr/bin/env python3
"""
Build worst-case residual metrics from a JSON residual report.

Reads:
  a report written by `hypersurface-laplacians ... --out report.json`

Outputs:
  - Printed metrics summary (stdout)
  - CSV: one row per (identity, surface) with rows, max residual, tol at max, failures
  - Optional Markdown snippet for docs/metrics/residuals.md

Usage:
  python tools/metrics/build_residual_metrics.py --report out/report.json \
      --out-csv out/residual_metrics.csv --out-md docs/metrics/residuals.md
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import List

import pandas as pd

from hypersurface_laplacians.verify import ResidualReport

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
log = logging.getLogger("build_residual_metrics")


def load_report(path: Path) -> ResidualReport:
    with path.open(encoding="utf-8") as f:
        return ResidualReport.from_dict(json.load(f))


def by_route(report: ResidualReport) -> pd.DataFrame:
    df = report.frame()
    if df.empty:
        return pd.DataFrame(columns=["route", "rows", "max_residual"])
    return (
        df.groupby("route", sort=True)
        .agg(rows=("residual", "size"), max_residual=("residual", "max"))
        .reset_index()
    )


def to_markdown(summary: pd.DataFrame, meta: dict) -> str:
    lines: List[str] = [
        "| identity | surface | rows | max residual | tol at max | failures |",
        "|---|---|---:|---:|---:|---:|",
    ]
    for row in summary.itertuples(index=False):
        lines.append(
            f"| {row.identity} | {row.surface} | {row.rows} | {row.max_residual:.3e} | {row.tol_at_max:.2e} | {row.failures} |"
        )
    head = f"Seed {meta.get('seed')}, engine {meta.get('engine')}, {meta.get('points')} points per combination.\n\n"
    return head + "\n".join(lines) + "\n"


def main(argv: List[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description="Summarize a residual report.")
    ap.add_argument("--report", required=True, help="JSON report path")
    ap.add_argument("--out-csv", default=None, help="Worst-case CSV path")
    ap.add_argument("--out-md", default=None, help="Markdown table path")
    args = ap.parse_args(argv)

    path = Path(args.report)
    if not path.exists():
        print(f"ERROR: missing report: {path}")
        return 2
    try:
        report = load_report(path)
    except (json.JSONDecodeError, KeyError) as e:
        print(f"ERROR: failed to read report: {path} :: {e}")
        return 2

    summary = report.summary()
    routes = by_route(report)

    print("\nResidual Metrics")
    print("================")
    print(f"Rows           : {len(report.results)}")
    print(f"Failed rows    : {len(report.failures)}")
    print(f"Identities     : {summary['identity'].nunique() if not summary.empty else 0}\n")

    print("By route:")
    for row in routes.itertuples(index=False):
        print(f"  {row.route:6s} {row.rows:6d}  max {row.max_residual:.3e}")

    print("\nWorst case per (identity, surface):")
    for row in summary.itertuples(index=False):
        flag = "" if row.failures == 0 else f"  FAIL x{row.failures}"
        print(f"  {row.identity:16s} {row.surface:14s} {row.max_residual:.3e}{flag}")
    print()

    if args.out_csv:
        out = Path(args.out_csv)
        out.parent.mkdir(parents=True, exist_ok=True)
        summary.to_csv(out, index=False)
        log.info("Wrote CSV: %s", out)
    if args.out_md:
        out = Path(args.out_md)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(to_markdown(summary, report.meta), encoding="utf-8")
        log.info("Wrote Markdown: %s", out)

    return 1 if report.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())

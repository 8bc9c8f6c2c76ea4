#!/usr/bin/env python3
"""
Validate integrity of the geometry_specs/ tree.

Checks:
- every *.yaml under curves/, surfaces/, fields/, suites/ loads
- expressions parse (curve a/b, field components, custom extensions)
- surfaces build: curve references resolve, a > 0 and f > 0 on the sample interval
- suite references (surfaces, fields, extensions) resolve
- suite identity ids exist in the catalog

Exit codes: 2 missing spec tree, 1 validation errors, 0 OK.

Usage:
  python tools/validate/validate_geometry_specs.py [--root geometry_specs]
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Callable, Dict, List

from hypersurface_laplacians.errors import HypersurfaceError
from hypersurface_laplacians.specs import (
    load_curve,
    load_field,
    load_run_config,
    load_surface,
    resolve_extension,
    resolve_field,
    resolve_surface,
)
from hypersurface_laplacians.verify import CATALOG_BY_ID

logging.basicConfig(level=logging.WARNING, format="%(asctime)s - %(levelname)s - %(message)s")

ROOT = Path("geometry_specs")
KINDS = ("curves", "surfaces", "fields", "suites")


def iter_yaml_files(root: Path, kind: str) -> List[Path]:
    d = root / kind
    if not d.exists():
        return []
    return sorted(d.rglob("*.yaml"))


def check_suite(path: Path) -> List[str]:
    """Load a run config and resolve everything it references."""
    problems: List[str] = []
    cfg = load_run_config(path)
    for ident in cfg.identities or []:
        if ident.upper() not in CATALOG_BY_ID:
            problems.append(f"identities -> '{ident}' is not a catalog id")
    cfg = cfg.resolved()
    for key, resolve in (("surfaces", resolve_surface), ("fields", resolve_field), ("extensions", resolve_extension)):
        for ref in getattr(cfg, key):
            try:
                resolve(ref)
            except HypersurfaceError as e:
                problems.append(f"{key} -> '{ref}' :: {e}")
    return problems


LOADERS: Dict[str, Callable[[Path], object]] = {
    "curves": load_curve,
    "surfaces": load_surface,
    "fields": load_field,
}


def main(argv: List[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description="Validate the geometry_specs/ YAML tree.")
    ap.add_argument("--root", default=str(ROOT), help="Spec tree root (default: geometry_specs)")
    args = ap.parse_args(argv)
    root = Path(args.root)

    if not root.exists():
        print(f"ERROR: missing spec tree: {root}")
        return 2

    errors = 0
    counts = {kind: 0 for kind in KINDS}

    for kind in KINDS:
        for ypath in iter_yaml_files(root, kind):
            counts[kind] += 1
            try:
                if kind == "suites":
                    for problem in check_suite(ypath):
                        print(f"ERROR: {ypath}: {problem}")
                        errors += 1
                else:
                    LOADERS[kind](ypath)
            except HypersurfaceError as e:
                print(f"ERROR: {ypath} :: {e}")
                errors += 1

    print("\nValidation summary:")
    for kind in KINDS:
        print(f"  {kind:9s}: {counts[kind]}")
    print(f"  Errors   : {errors}")

    if not any(counts.values()):
        print("WARN: No YAML files found under expected spec dirs.")
        return 0

    if errors:
        print("\nFix the listed files before committing.")
        return 1

    print("\nOK: every spec file loads and every reference resolves.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

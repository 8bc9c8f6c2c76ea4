"""Numerical verification of Laplacian identities on hypersurfaces."""

__version__ = "0.1.0"

from .errors import HypersurfaceError  # noqa: E402
from .verify import CATALOG, ResidualReport, run_check, run_suite  # noqa: E402

__all__ = ["CATALOG", "HypersurfaceError", "ResidualReport", "__version__", "run_check", "run_suite"]

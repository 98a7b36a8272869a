"""Robust MCMC samplers for pathological targets."""
from importlib.metadata import PackageNotFoundError, version as _version

from .core import ChainState, InitializationError, InvariantViolation, RngStream, Trace, mh_accept, run_chain, run_replicates

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = ["ChainState", "InitializationError", "InvariantViolation", "RngStream", "Trace",
           "mh_accept", "run_chain", "run_replicates", "__version__"]

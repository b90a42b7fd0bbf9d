"""Simulation kernel with backend selection.

The compiled loop (fastloop, Cython) is preferred; the pure-numpy loop
(pyloop) is the fallback and the semantic reference.  Both implement the
same `run_loop` contract.  Set HARMEST_BACKEND=python to force the
fallback.
"""
import os

from . import pyloop

try:
    from . import fastloop as _fastloop
except ImportError:  # extension not built; pure-python fallback
    _fastloop = None

if _fastloop is not None and os.environ.get("HARMEST_BACKEND", "").lower() != "python":
    run_loop = _fastloop.run_loop
    BACKEND = "cython"
else:
    run_loop = pyloop.run_loop
    BACKEND = "python"


def available_backends():
    """Mapping of backend name to its run_loop; used by tests and benchmarks."""
    out = {"python": pyloop.run_loop}
    if _fastloop is not None:
        out["cython"] = _fastloop.run_loop
    return out

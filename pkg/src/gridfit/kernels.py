"""Backend selection for the numerical kernels.

The Cython extension ``gridfit._core`` is used when it is importable; the
pure-Python module ``gridfit._pycore`` is used otherwise, or when the
environment variable ``GRIDFIT_BACKEND=python`` is set.
"""
import logging
import os

from . import _pycore

log = logging.getLogger(__name__)

_impl = _pycore
BACKEND = "python"
if os.environ.get("GRIDFIT_BACKEND", "").lower() != "python":
    try:
        from . import _core as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        log.debug("compiled kernels unavailable, using pure-Python fallback")

OK = _pycore.OK
BFS_DIVERGED = _pycore.BFS_DIVERGED

volt_var = _impl.volt_var
plant_run = _impl.plant_run
tf_run = _impl.tf_run
range_index = _impl.range_index
partitioned_run = _impl.partitioned_run
bfs_solve = _impl.bfs_solve
feeder_run = _impl.feeder_run
branch_currents = _pycore.branch_currents


def get(backend):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if backend == "python":
        return _pycore
    if backend == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {backend!r}")

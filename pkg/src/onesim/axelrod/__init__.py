"""Cultural dissemination on a grid, plus the LC/GP metrics.

The interaction and metric kernels exist twice: a compiled Cython extension
(``_fast``) and a pure-Python twin (``kernels_pure``) with identical
signatures and bit-identical results. The compiled one is preferred when it
imported cleanly; set ONESIM_PURE_KERNELS=1 to force the fallback.
"""
import os

from . import kernels_pure

if os.environ.get("ONESIM_PURE_KERNELS") == "1":
    kernels = kernels_pure
    KERNEL_IMPL = "pure"
else:
    try:
        from . import _fast as kernels
        KERNEL_IMPL = "compiled"
    except ImportError:
        kernels = kernels_pure
        KERNEL_IMPL = "pure"

from .grid import CulturalGrid  # noqa: E402
from .metrics import (  # noqa: E402
    MetricSeries,
    global_polarization,
    local_convergence,
    similarity,
)
from .dynamics import cell_agent_id, interact_step, reference_run, visit_order  # noqa: E402

__all__ = [
    "CulturalGrid",
    "KERNEL_IMPL",
    "MetricSeries",
    "cell_agent_id",
    "global_polarization",
    "interact_step",
    "kernels",
    "kernels_pure",
    "local_convergence",
    "reference_run",
    "similarity",
    "visit_order",
]

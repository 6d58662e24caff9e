"""Kernel selection: the compiled extension when built, else the numpy twin.

Set ``RIL_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("RIL_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as impl
else:
    try:
        from . import _kernels as impl
    except ImportError:
        from . import _kernels_py as impl

IMPLEMENTATION = impl.IMPLEMENTATION
mix64 = impl.mix64
splitmix_block = impl.splitmix_block
sample_indices = impl.sample_indices
degree_walk_final = impl.degree_walk_final
lil_walk_extrema = impl.lil_walk_extrema
log_step = impl.log_step
log_chain = impl.log_chain

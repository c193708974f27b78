"""Kernel backend selection: compiled extension vs pure numpy.

The hot kernels (forward kinematics, skinning, rasterization) exist twice:
as a Cython extension (``handik._core``) and as plain numpy
(``handik._kernels_np``). At import we pick the extension when it is
available, falling back to numpy otherwise. Both produce identical
results; ``benchmarks/bench_kernels.py`` compares their speed.

Set ``HANDIK_BACKEND=python`` to force the fallback, ``=compiled`` to
require the extension (raising if it is missing).
"""
from __future__ import annotations

import os
import warnings

from . import _kernels_np


def _select():
    mode = os.environ.get("HANDIK_BACKEND", "auto")
    if mode not in ("auto", "compiled", "python"):
        raise ValueError(f"HANDIK_BACKEND must be auto|compiled|python, got {mode!r}")
    if mode in ("auto", "compiled"):
        try:
            from . import _core
            return _core, "compiled"
        except ImportError:
            if mode == "compiled":
                raise
            warnings.warn(
                "handik._core extension not built; using the slower numpy kernels",
                RuntimeWarning,
                stacklevel=2,
            )
    return _kernels_np, "python"


impl, _name = _select()


def backend_name() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _name


fk_chain = impl.fk_chain
fk_chain_batch = impl.fk_chain_batch
lbs_skin = impl.lbs_skin
rasterize = impl.rasterize

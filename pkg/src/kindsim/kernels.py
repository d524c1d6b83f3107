"""Event-kernel selection.

The compiled kernel (``kindsim._ckernel``) is used when it has been built;
otherwise the pure-Python kernel is loaded.  Setting ``KINDSIM_PURE=1`` in the
environment forces the fallback.  Both produce identical trajectories for the
same random stream.

``run_chunk`` advances a configuration by at most ``max_events`` events, reading
three raw words per event from ``raw`` starting at ``pos``, and returns
``(events_done, new_pos, total, clock, n_plus_ok, n_minus_ok, status)``.
"""
from __future__ import annotations

import os

from . import _pykernel
from ._pykernel import (  # noqa: F401
    ABSORBED_MINUS,
    ABSORBED_PLUS,
    CONTINUE,
    HIT_MINUS,
    HIT_PLUS,
)

py_run_chunk = _pykernel.run_chunk

try:
    from ._ckernel import run_chunk as c_run_chunk
except ImportError:  # extension not built
    c_run_chunk = None

if c_run_chunk is not None and os.environ.get("KINDSIM_PURE", "") != "1":
    run_chunk = c_run_chunk
    BACKEND = "cython"
else:
    run_chunk = py_run_chunk
    BACKEND = "python"


def get_kernel(name: str | None = None):
    """Return a kernel by name (``"cython"`` or ``"python"``); default is the active one."""
    if name is None:
        return run_chunk
    if name == "python":
        return py_run_chunk
    if name == "cython":
        if c_run_chunk is None:
            raise ImportError("compiled kernel kindsim._ckernel is not built")
        return c_run_chunk
    raise ValueError(f"unknown kernel {name!r}")

"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python reference in ``_pykernels`` is used.  Set ``PRIVPART_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import os

from privpart import _pykernels

if os.environ.get("PRIVPART_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from privpart import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

df_matrix = _impl.df_matrix
walk_batch = _impl.walk_batch
replay_traces = _impl.replay_traces
escaping_edges = _impl.escaping_edges


def available_backends() -> dict:
    """Name -> module for every backend importable in this environment."""
    out = {"python": _pykernels}
    try:
        from privpart import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out

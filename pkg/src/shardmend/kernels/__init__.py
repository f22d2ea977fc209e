"""Hot numeric kernels with backend selection at import.

The compiled Cython extension is used when available; otherwise the pure
numpy implementation in `kernels.fallback` takes over. Both expose the same
contract and produce identical results. Set SHARDMEND_KERNELS=fallback (or
=compiled) to force a backend.
"""

import os

from . import fallback as _fallback
from .tree import LEAF_SIZE, KDTree, build as build_tree

_requested = os.environ.get("SHARDMEND_KERNELS", "auto").strip().lower() or "auto"
if _requested not in ("auto", "compiled", "fallback"):
    raise ValueError(
        f"SHARDMEND_KERNELS must be 'auto', 'compiled', or 'fallback', got {_requested!r}"
    )

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _ckern as _impl
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = None
if _impl is None:
    _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "fallback"

query = _impl.query
eliminate = _impl.eliminate

__all__ = ["BACKEND", "KDTree", "LEAF_SIZE", "build_tree", "eliminate", "query"]

"""Kernel dispatch: the compiled core when importable, numpy otherwise.

Set ``COARSEFORGE_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("COARSEFORGE_PURE"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback
        BACKEND = "python"

all_pairs = _impl.all_pairs
next_hop = _impl.next_hop
thin_exact = _impl.thin_exact
thin_triples = _impl.thin_triples
four_point_exact = _impl.four_point_exact
four_point_quads = _impl.four_point_quads

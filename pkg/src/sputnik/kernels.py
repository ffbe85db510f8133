"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SPUTNIK_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is used. ``BACKEND`` names the active one.
"""
from __future__ import annotations

import os

from . import _pykernels

_force_python = os.environ.get("SPUTNIK_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

nondominated_ranks = _impl.nondominated_ranks
crowding_distance = _impl.crowding_distance
hypervolume_2d = _impl.hypervolume_2d
evaluate_placements = _impl.evaluate_placements
dominance_relation = _impl.dominance_relation
epsilon_archive_update = _impl.epsilon_archive_update


def available_backends() -> dict:
    """Map backend name to kernel module for every backend importable here."""
    backends = {"python": _pykernels}
    try:
        from . import _kernels

        backends["cython"] = _kernels
    except ImportError:
        pass
    return backends

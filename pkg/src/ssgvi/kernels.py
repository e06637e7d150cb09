"""Kernel backend selection.

The compiled extension is used when it imports; set ``SSGVI_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

if os.environ.get("SSGVI_PURE_PYTHON"):
    from ssgvi import _pykernels as impl

    BACKEND = "python"
else:
    try:
        from ssgvi import _ckernels as impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from ssgvi import _pykernels as impl

        BACKEND = "python"

backup = impl.backup
action_values = impl.action_values
all_action_values = impl.all_action_values

__all__ = ["BACKEND", "backup", "action_values", "all_action_values", "impl"]

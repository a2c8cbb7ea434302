"""Numeric core: compiled circuit form and the transient kernels.

The hot transient loop has two interchangeable implementations: a Cython
extension (engine_cy) and a pure-numpy fallback (engine_py).  Selection
happens at import time; set RFPA_BACKEND=python or RFPA_BACKEND=compiled
to force one (forcing "compiled" raises if the extension is not built).
"""

from __future__ import annotations

import os

from . import engine_py


def _select_backend():
    forced = os.environ.get("RFPA_BACKEND", "").strip().lower()
    if forced == "python":
        return engine_py
    try:
        from . import engine_cy
    except ImportError:
        if forced == "compiled":
            raise ImportError(
                "RFPA_BACKEND=compiled but the rfpa._core.engine_cy "
                "extension is not built (pip install -e . rebuilds it)")
        return engine_py
    return engine_cy


engine = _select_backend()


def backend_name() -> str:
    return engine.BACKEND_NAME


def get_engine(name: str | None = None):
    """Engine module by name ("python" / "compiled"), default the selected one."""
    if name is None:
        return engine
    if name == "python":
        return engine_py
    if name == "compiled":
        from . import engine_cy
        return engine_cy
    raise ValueError(f"unknown backend {name!r}")

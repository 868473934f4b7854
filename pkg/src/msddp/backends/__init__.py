"""Compute backend selection.

The compiled extension (``msddp._kernels``) implements the same entry points
as the NumPy reference backend (:mod:`msddp.backends.pure`) and is preferred
when importable. Set ``MSDDP_BACKEND=python`` or ``MSDDP_BACKEND=compiled``
to force a choice; the default ``auto`` falls back silently.
"""

import os

from . import pure


def _load():
    choice = os.environ.get("MSDDP_BACKEND", "auto")
    if choice not in ("auto", "compiled", "python"):
        raise ValueError(
            f"MSDDP_BACKEND must be auto, compiled or python, got {choice!r}"
        )
    if choice == "python":
        return pure
    try:
        from .. import _kernels  # noqa: PLC0415

        return _kernels
    except ImportError:
        if choice == "compiled":
            raise
        return pure


active = _load()


def backend_name() -> str:
    return active.NAME

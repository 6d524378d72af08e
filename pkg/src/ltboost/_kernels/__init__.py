"""Kernel backend selection.

The compiled extension is preferred when present; set LTBOOST_BACKEND=python
to force the numpy fallback, or LTBOOST_BACKEND=compiled to fail loudly if
the extension is missing.
"""

import os

_requested = os.environ.get("LTBOOST_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "compiled"):
    raise ValueError(
        f"LTBOOST_BACKEND must be 'auto', 'python' or 'compiled', got {_requested!r}"
    )

if _requested == "python":
    from . import pybackend as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import pybackend as _impl

        BACKEND = "python"

best_split_feature = _impl.best_split_feature
cd_sweeps = _impl.cd_sweeps
cd_sweeps_gram = _impl.cd_sweeps_gram

__all__ = ["BACKEND", "best_split_feature", "cd_sweeps", "cd_sweeps_gram"]

"""Kernel backend selection.

Prefers the compiled extension, falls back to the pure-Python twin.
HOPCHECK_PURE_PYTHON=1 forces the fallback (used by the benchmark and by
the parity tests). BACKEND names the active implementation.
"""

import os

if os.environ.get("HOPCHECK_PURE_PYTHON"):
    from hopcheck import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from hopcheck import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from hopcheck import _kernels_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

fnv1a64 = _impl.fnv1a64
ngram_bins = _impl.ngram_bins
accumulate_scores = _impl.accumulate_scores
best_span = _impl.best_span

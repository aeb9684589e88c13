"""Hot-path kernel selection: compiled extension if present, NumPy otherwise.

Set the environment variable BIBOW_PURE=1 before import to force the pure
NumPy backend even when the compiled one is available (used by the benchmark
and by tests that compare the two).
"""

import os

from bibow.kernels import py_inner

if os.environ.get("BIBOW_PURE"):
    _impl = py_inner
else:
    try:
        from bibow.kernels import _inner as _impl
    except ImportError:
        _impl = py_inner

COMPILED = bool(_impl.COMPILED)
BACKEND = "compiled" if COMPILED else "pure"

score_pair = _impl.score_pair
train_pair = _impl.train_pair

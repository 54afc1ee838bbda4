"""Backend selection for the hot loops.

Every loop-heavy routine is written once as plain Python over numpy arrays and
wrapped with :func:`kernel`. The wrapper dispatches to a numba-compiled copy
(compiled lazily on first use) or to the interpreted original, depending on the
active backend.

The initial backend comes from the environment:

    GRT_DISABLE_NUMBA=1   run the pure-numpy/Python path
    GRT_THREADS=N         cap numba's thread pool
"""

from __future__ import annotations

import contextlib
import functools
import os

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA = "numba"
NUMPY = "numpy"

_TRUTHY = {"1", "true", "yes", "on"}


def _initial_backend() -> str:
    if numba is None:
        return NUMPY
    if os.environ.get("GRT_DISABLE_NUMBA", "").strip().lower() in _TRUTHY:
        return NUMPY
    return NUMBA


_backend = _initial_backend()

if numba is not None and os.environ.get("GRT_THREADS"):
    numba.set_num_threads(max(1, min(int(os.environ["GRT_THREADS"]), numba.config.NUMBA_NUM_THREADS)))


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in (NUMBA, NUMPY):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == NUMBA and numba is None:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


class _Kernel:
    """Callable holding the interpreted function and its lazily jitted twin."""

    def __init__(self, fn, jit_options):
        self.py = fn
        self._jit_options = jit_options
        self._jitted = None
        functools.update_wrapper(self, fn)

    @property
    def jit(self):
        if self._jitted is None:
            self._jitted = numba.njit(**self._jit_options)(self.py)
        return self._jitted

    def __call__(self, *args):
        if _backend == NUMBA:
            return self.jit(*args)
        return self.py(*args)


def kernel(fn=None, **jit_options):
    """Mark ``fn`` as a hot loop with a numba path and an interpreted fallback."""
    jit_options.setdefault("cache", True)
    if fn is None:
        return lambda f: _Kernel(f, jit_options)
    return _Kernel(fn, jit_options)


def helper(fn):
    """Small function called from inside kernels.

    Stays a plain Python function when called from the interpreted path and
    is compiled inline into jitted callers.
    """
    if numba is None:  # pragma: no cover
        return fn
    return numba.extending.register_jitable(fn)

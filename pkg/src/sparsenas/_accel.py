"""Backend selection for the hot kernels.

``SPARSENAS_BACKEND`` picks the implementation:

* ``numba`` -- every kernel is an ``@njit`` loop;
* ``numpy`` -- every kernel is pure numpy / Python, numba is never touched;
* ``auto`` (default) -- numba for scalar loop kernels (coordinate descent),
  vectorised numpy for the elementwise activation mixtures, where numpy's SIMD
  transcendental functions beat per-element libm calls from numba.
"""
import os

BACKEND = os.environ.get("SPARSENAS_BACKEND", "auto").strip().lower()
if BACKEND not in ("auto", "numba", "numpy"):
    raise ImportError(f"SPARSENAS_BACKEND must be auto, numba or numpy; got {BACKEND!r}")

numba = None
if BACKEND != "numpy":
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None

numba_available = numba is not None
JIT_LOOPS = numba_available and BACKEND in ("auto", "numba")
JIT_ELEMENTWISE = numba_available and BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` for loop kernels when enabled, otherwise a no-op decorator."""
    if JIT_LOOPS:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def njit_elementwise(*args, **kwargs):
    """Like :func:`njit`, but only jit-compiles under ``SPARSENAS_BACKEND=numba``.

    Elementwise kernels also back the scalar ``act`` helpers, so they are always
    defined; they stay plain Python unless explicitly requested.
    """
    if JIT_ELEMENTWISE:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn

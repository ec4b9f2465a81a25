"""Integer-encoded homomorphism existence kernel.

Atoms are encoded as rows ``[pred, arg0, arg1, ...]``. In the source matrix an
argument ``>= 0`` is a variable slot and an argument ``< 0`` is the fixed target
term ``-arg - 1``. Target rows are grouped by predicate so that
``pstart[p]:pend[p]`` spans the candidates of predicate ``p``.

The kernel is compiled with numba when available. Set ``KBOUND_NO_NUMBA=1``
to force the pure-Python path, which runs the very same function on numpy
arrays.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("KBOUND_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:  # pragma: no cover - depends on the environment
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _hom_exists_py(src, arity, tgt, pstart, pend, nvars):
    ns = src.shape[0]
    if ns == 0:
        return True
    assign = np.full(nvars, -1, dtype=np.int64)
    owner = np.full(nvars, -1, dtype=np.int64)
    cursor = np.zeros(ns, dtype=np.int64)
    cursor[0] = pstart[src[0, 0]]
    level = 0
    while level >= 0:
        # drop bindings made by the previous candidate at this level
        for k in range(arity[level]):
            a = src[level, 1 + k]
            if a >= 0 and owner[a] == level:
                assign[a] = -1
                owner[a] = -1
        p = src[level, 0]
        j = cursor[level]
        end = pend[p]
        found = False
        while j < end:
            ok = True
            for k in range(arity[level]):
                a = src[level, 1 + k]
                t = tgt[j, 1 + k]
                if a < 0:
                    if -a - 1 != t:
                        ok = False
                        break
                else:
                    cur = assign[a]
                    if cur == -1:
                        assign[a] = t
                        owner[a] = level
                    elif cur != t:
                        ok = False
                        break
            if ok:
                found = True
                break
            for k in range(arity[level]):
                a = src[level, 1 + k]
                if a >= 0 and owner[a] == level:
                    assign[a] = -1
                    owner[a] = -1
            j += 1
        if found:
            cursor[level] = j + 1
            level += 1
            if level == ns:
                return True
            cursor[level] = pstart[src[level, 0]]
        else:
            level -= 1
    return False


if njit is not None:
    _hom_exists_jit = njit(cache=True)(_hom_exists_py)
else:  # pragma: no cover
    _hom_exists_jit = None

BACKEND = "numba" if _hom_exists_jit is not None else "python"


def warm_up() -> None:
    """Load (or compile) the jitted kernel now rather than on the first real call."""
    src = np.array([[0, 0]], dtype=np.int64)
    one = np.array([1], dtype=np.int64)
    zero = np.array([0], dtype=np.int64)
    hom_exists(src, one, np.array([[0, 0]], dtype=np.int64), zero, one, 1)


def hom_exists(src, arity, tgt, pstart, pend, nvars, backend: str | None = None) -> bool:
    """Run the kernel on the selected backend (default: the module backend)."""
    use = backend or BACKEND
    if use == "numba":
        if _hom_exists_jit is None:
            raise RuntimeError("numba backend is not available")
        return bool(_hom_exists_jit(src, arity, tgt, pstart, pend, nvars))
    return bool(_hom_exists_py(src, arity, tgt, pstart, pend, nvars))

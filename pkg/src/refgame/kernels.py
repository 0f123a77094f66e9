"""Numeric inner loops: modular matrix products, Freivalds probes, TM traces.

Each kernel has a numba-compiled body and a pure-numpy fallback.  Set
``REFGAME_NO_NUMBA=1`` to force the fallback (or if numba is missing).
Both paths must agree bit-for-bit; ``tests/test_kernels.py`` checks that.
"""

from __future__ import annotations

import os

import numpy as np

MAX_MODULUS = 1 << 28  # keeps n * (p-1)^2 inside int64 for n <= 64

_DISABLED = os.environ.get("REFGAME_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in CI
    HAVE_NUMBA = False


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# --- pure numpy ---------------------------------------------------------------

def _matmul_mod_np(a, b, p):
    return (a @ b) % p


def _freivalds_row_np(a, b, c, r, p):
    lhs = (a @ ((b @ r) % p)) % p
    rhs = (c @ r) % p
    bad = np.nonzero(lhs != rhs)[0]
    return int(bad[0]) if bad.size else -1


def _tm_trace_np(nxt, wrt, mv, tape0, state0, head0, steps):
    width = tape0.shape[0]
    out = np.empty((steps + 1, width + 2), dtype=np.int64)
    tape = tape0.astype(np.int64).copy()
    q, h = int(state0), int(head0)
    out[0, 0], out[0, 1], out[0, 2:] = q, h, tape
    for t in range(1, steps + 1):
        s = tape[h]
        nq = nxt[q, s]
        if nq >= 0:
            tape[h] = wrt[q, s]
            h = min(max(h + mv[q, s], 0), width - 1)
            q = nq
        out[t, 0], out[t, 1], out[t, 2:] = q, h, tape
    return out


# --- numba ---------------------------------------------------------------------

if HAVE_NUMBA:
    @njit(cache=True)
    def _matmul_mod_nb(a, b, p):
        n, m = a.shape
        k = b.shape[1]
        out = np.zeros((n, k), dtype=np.int64)
        for i in range(n):
            for t in range(m):
                x = a[i, t]
                for j in range(k):
                    out[i, j] += x * b[t, j]
        for i in range(n):
            for j in range(k):
                out[i, j] %= p
        return out

    @njit(cache=True)
    def _freivalds_row_nb(a, b, c, r, p):
        n = a.shape[0]
        br = np.zeros(n, dtype=np.int64)
        for i in range(n):
            acc = 0
            for t in range(n):
                acc += b[i, t] * r[t]
            br[i] = acc % p
        for i in range(n):
            lhs = 0
            rhs = 0
            for t in range(n):
                lhs += a[i, t] * br[t]
                rhs += c[i, t] * r[t]
            if lhs % p != rhs % p:
                return i
        return -1

    @njit(cache=True)
    def _tm_trace_nb(nxt, wrt, mv, tape0, state0, head0, steps):
        width = tape0.shape[0]
        out = np.empty((steps + 1, width + 2), dtype=np.int64)
        tape = tape0.astype(np.int64).copy()
        q = state0
        h = head0
        out[0, 0] = q
        out[0, 1] = h
        out[0, 2:] = tape
        for t in range(1, steps + 1):
            s = tape[h]
            nq = nxt[q, s]
            if nq >= 0:
                tape[h] = wrt[q, s]
                h = min(max(h + mv[q, s], 0), width - 1)
                q = nq
            out[t, 0] = q
            out[t, 1] = h
            out[t, 2:] = tape
        return out


def _as_i64(x):
    return np.ascontiguousarray(np.asarray(x, dtype=np.int64))


def _check_bounds(p: int, inner: int) -> None:
    """Sums are reduced once at the end, so n * (p-1)**2 must fit in int64."""
    if not 2 <= p < MAX_MODULUS:
        raise ValueError(f"modulus {p} outside supported range [2, 2**28)")
    if inner > 64:
        raise ValueError("inner dimension above 64 risks int64 overflow")


def matmul_mod(a, b, p: int, use_numba: bool | None = None) -> np.ndarray:
    a, b = _as_i64(a), _as_i64(b)
    _check_bounds(p, a.shape[1])
    if (HAVE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _matmul_mod_nb(a, b, p)
    return _matmul_mod_np(a, b, p)


def freivalds_row(a, b, c, r, p: int, use_numba: bool | None = None) -> int:
    """First row where ``A(Br) != Cr`` mod p, or -1 when the probe passes."""
    a, b, c, r = _as_i64(a), _as_i64(b), _as_i64(c), _as_i64(r)
    _check_bounds(p, a.shape[0])
    if (HAVE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return int(_freivalds_row_nb(a, b, c, r, p))
    return _freivalds_row_np(a, b, c, r, p)


def tm_trace(nxt, wrt, mv, tape0, state0: int, head0: int, steps: int,
             use_numba: bool | None = None) -> np.ndarray:
    """All configurations ``(state, head, cells...)`` for times 0..steps.

    ``nxt[q, s] < 0`` marks a halting pair; the configuration then repeats.
    The head is clamped to the tape window.
    """
    nxt, wrt, mv, tape0 = _as_i64(nxt), _as_i64(wrt), _as_i64(mv), _as_i64(tape0)
    if (HAVE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _tm_trace_nb(nxt, wrt, mv, tape0, int(state0), int(head0), int(steps))
    return _tm_trace_np(nxt, wrt, mv, tape0, int(state0), int(head0), int(steps))

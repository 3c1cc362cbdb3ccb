"""Hot numeric kernels for longest-common-subsequence entity matching.

Entity linking scans every distinct value of a column, so LCS length is the
one true inner loop in the package. Two implementations live here:

* a numba ``@njit(parallel=True)`` kernel iterating values in parallel, and
* a pure-numpy fallback that vectorizes the DP across the value batch.

The numba path is the default whenever numba imports; set the environment
flag ``TABLEZOOMER_NO_NUMBA=1`` before import to force the numpy path (the
benchmark in ``benchmarks/lcs_bench.py`` compares both). Both paths take
code-point arrays, so callers never re-encode per pair.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "TABLEZOOMER_NO_NUMBA"

try:
    from numba import njit, prange

    _NUMBA_IMPORTED = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _NUMBA_IMPORTED = False

_FORCED_NUMPY = os.environ.get(ENV_FLAG, "").strip() not in ("", "0", "false", "False")
NUMBA_ENABLED = _NUMBA_IMPORTED and not _FORCED_NUMPY


def active_backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def encode_text(text: str) -> np.ndarray:
    """Unicode code points as a uint32 vector (empty string -> empty array)."""
    if not text:
        return np.empty(0, dtype=np.uint32)
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)


def encode_batch(values: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Pack many strings into one padded uint32 matrix plus a length vector."""
    n = len(values)
    lengths = np.fromiter((len(v) for v in values), dtype=np.int64, count=n)
    width = int(lengths.max()) if n else 0
    matrix = np.zeros((n, max(width, 1)), dtype=np.uint32)
    if n and width:
        flat = np.frombuffer("".join(values).encode("utf-32-le"), dtype=np.uint32)
        offsets = np.concatenate(([0], np.cumsum(lengths)))
        for i in range(n):
            matrix[i, : lengths[i]] = flat[offsets[i] : offsets[i + 1]]
    return matrix, lengths


if _NUMBA_IMPORTED:

    @njit(cache=True)
    def _lcs_one_numba(entity, le, value, lv, prev, cur):
        for j in range(lv + 1):
            prev[j] = 0
        for i in range(1, le + 1):
            cur[0] = 0
            ei = entity[i - 1]
            for j in range(1, lv + 1):
                if ei == value[j - 1]:
                    cur[j] = prev[j - 1] + 1
                else:
                    cur[j] = max(cur[j - 1], prev[j])
            for j in range(lv + 1):
                prev[j] = cur[j]
        return prev[lv]

    @njit(parallel=True, cache=True)
    def _lcs_batch_numba(entity, le, values, lengths):
        n = values.shape[0]
        width = values.shape[1]
        out = np.zeros(n, dtype=np.int64)
        for k in prange(n):
            prev = np.zeros(width + 1, dtype=np.int64)
            cur = np.zeros(width + 1, dtype=np.int64)
            out[k] = _lcs_one_numba(entity, le, values[k], lengths[k], prev, cur)
        return out


def _lcs_batch_numpy(entity: np.ndarray, values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """DP vectorized across the batch axis; loops only over string positions."""
    n = values.shape[0]
    le = entity.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if le == 0:
        return np.zeros(n, dtype=np.int64)
    width = int(lengths.max()) if n else 0
    prev = np.zeros((n, le + 1), dtype=np.int64)
    for t in range(1, width + 1):
        active = lengths >= t
        if not active.any():
            break
        vchar = values[:, t - 1]
        cur = np.zeros_like(prev)
        for i in range(1, le + 1):
            take = np.where(vchar == entity[i - 1], prev[:, i - 1] + 1, 0)
            skip = np.maximum(cur[:, i - 1], prev[:, i])
            cur[:, i] = np.maximum(take, skip)
        prev = np.where(active[:, None], cur, prev)
    return prev[:, le].copy()


def lcs_lengths(entity: np.ndarray, values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """LCS length of `entity` against every row of `values`."""
    if NUMBA_ENABLED:
        return _lcs_batch_numba(
            entity.astype(np.uint32, copy=False),
            np.int64(entity.shape[0]),
            values.astype(np.uint32, copy=False),
            lengths.astype(np.int64, copy=False),
        )
    return _lcs_batch_numpy(entity, values, lengths)


def lcs_length_pair(a: str, b: str) -> int:
    """Scalar convenience wrapper over the batch kernel."""
    ea = encode_text(a)
    matrix, lengths = encode_batch([b])
    return int(lcs_lengths(ea, matrix, lengths)[0])

"""Word-parallel XOR/AND/popcount kernel for the all-against-all comparison."""

import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # The bundled TBB is often too old; avoid the warning and fall back quietly.
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)


@numba.njit(inline="always", cache=True)
def popcount64(x):
    # LLVM lowers this pattern to a native popcnt where available.
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return np.int64((x * _H01) >> _S56)


@numba.njit(parallel=True, cache=True)
def all_pairs_kernel(data, mask, rot_data, rot_mask, min_overlap,
                     out_a, out_b, out_disagree, out_valid_bits, out_slot, out_ok):
    """Fill the output columns for every pair ``i < j``.

    ``rot_data[r, j]`` holds code ``j`` rotated by the ``r``-th offset in
    preference order, so the first strict minimum found is the preferred one.
    Slot 0 must be the zero offset.
    """
    n, n_words = data.shape
    n_rot = rot_data.shape[0]
    for i in numba.prange(n - 1):
        base = i * (2 * n - i - 1) // 2
        for j in range(i + 1, n):
            pos = base + (j - i - 1)
            best_d = -1
            best_v = 0
            best_r = 0
            zero_d = 0
            zero_v = 0
            for r in range(n_rot):
                v = 0
                d = 0
                for w in range(n_words):
                    m = mask[i, w] & rot_mask[r, j, w]
                    v += popcount64(m)
                    d += popcount64((data[i, w] ^ rot_data[r, j, w]) & m)
                if r == 0:
                    zero_d = d
                    zero_v = v
                if v > 0 and v >= min_overlap:
                    if best_d < 0 or d * best_v < best_d * v:
                        best_d = d
                        best_v = v
                        best_r = r
            out_a[pos] = i
            out_b[pos] = j
            if best_d >= 0:
                out_disagree[pos] = best_d
                out_valid_bits[pos] = best_v
                out_slot[pos] = best_r
                out_ok[pos] = True
            else:
                out_disagree[pos] = zero_d
                out_valid_bits[pos] = zero_v
                out_slot[pos] = 0
                out_ok[pos] = False

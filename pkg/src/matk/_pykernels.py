"""numpy implementations of the compiled kernels in ``_kernels.pyx``.

Summation order matches the compiled code so results are bit-identical.
"""

import numpy as np


def _neighbours(arr):
    """Views of ``arr`` shifted from the up, down, left and right neighbour."""
    up = np.zeros_like(arr)
    down = np.zeros_like(arr)
    left = np.zeros_like(arr)
    right = np.zeros_like(arr)
    up[1:] = arr[:-1]
    down[:-1] = arr[1:]
    left[:, 1:] = arr[:, :-1]
    right[:, :-1] = arr[:, 1:]
    return up, down, left, right


def diffuse_fill(values, known):
    passes = 0
    while True:
        k = known.astype(bool)
        nk = _neighbours(k)
        cnt = sum(n.astype(np.int64) for n in nk)
        front = ~k & (cnt > 0)
        if not front.any():
            return passes
        s = np.zeros_like(values)
        for n, v in zip(nk, _neighbours(values)):
            s = s + np.where(n[..., None], v, 0.0)
        values[front] = s[front] / cnt[front][:, None]
        known[front] = 1
        passes += 1


def smooth_masked(values, mask, passes):
    m = mask.astype(bool)
    h, w = m.shape
    ones = np.ones((h, w), dtype=bool)
    cnt = 1 + sum(n.astype(np.int64) for n in _neighbours(ones))
    for _ in range(passes):
        s = values.copy()
        for v in _neighbours(values):
            s = s + v
        values[m] = s[m] / cnt[m][:, None]


def positive_rank_sum(sorted_scores, sorted_labels):
    n = len(sorted_scores)
    total = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        total += (i + j + 2) / 2.0 * int(sorted_labels[i : j + 1].sum())
        i = j + 1
    return total

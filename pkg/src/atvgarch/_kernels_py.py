"""Pure NumPy implementations of the hot kernels.

Selected at import time when the compiled extension is unavailable (or when
ATVGARCH_BACKEND=python).  Must stay numerically interchangeable with
``_kernels.pyx``; the test suite compares the two on random inputs.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def garch_recursion(x2, icpt, alphas, betas, h_head):
    """Conditional-variance recursion h[t] = icpt[t] + sum a_i x2[t-i] + sum b_j h[t-j].

    The first ``len(h_head)`` values are pinned; squared returns before the
    sample are treated as zero.
    """
    n = x2.shape[0]
    p = alphas.shape[0]
    q = betas.shape[0]
    m = h_head.shape[0]
    h = np.empty(n)
    h[: min(m, n)] = h_head[: min(m, n)]
    for t in range(m, n):
        acc = icpt[t]
        for i in range(1, p + 1):
            if t - i >= 0:
                acc += alphas[i - 1] * x2[t - i]
        for j in range(1, q + 1):
            acc += betas[j - 1] * h[t - j]
        h[t] = acc
    return h


def sim_recursion(eps, icpt, alphas, betas, v0):
    """Generate (x, h) from standardized innovations and an intercept path.

    The first max(p, q, 1) steps hold h at v0 so the recursion has a full
    set of lags to draw on.
    """
    n = eps.shape[0]
    p = alphas.shape[0]
    q = betas.shape[0]
    m = max(p, q, 1)
    h = np.empty(n)
    x = np.empty(n)
    for t in range(min(m, n)):
        h[t] = v0
        x[t] = np.sqrt(v0) * eps[t]
    for t in range(m, n):
        acc = icpt[t]
        for i in range(1, p + 1):
            acc += alphas[i - 1] * x[t - i] * x[t - i]
        for j in range(1, q + 1):
            acc += betas[j - 1] * h[t - j]
        h[t] = acc
        x[t] = np.sqrt(acc) * eps[t]
    return x, h


def multi_conv(signals, kernels, lengths, shifts, n_out):
    """Bank of truncated one-sided convolutions.

    out[s, t] = sum_{i=0}^{lengths[s]-1} kernels[s, i] * signals[s, t - shifts[s] - i]
    with out-of-range signal values treated as zero.
    """
    n_rows = signals.shape[0]
    out = np.zeros((n_rows, n_out))
    for s in range(n_rows):
        length = int(lengths[s])
        shift = int(shifts[s])
        if length == 0:
            continue
        conv = np.convolve(signals[s], kernels[s, :length])[:n_out]
        if shift == 0:
            out[s] = conv
        elif shift < n_out:
            out[s, shift:] = conv[: n_out - shift]
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled polyphase resampling kernel.

Same contract as capkit._resample_py.polyphase_apply; selected at import
time by capkit.resample when the extension built successfully.
"""

import numpy as np

cimport numpy as cnp


def polyphase_apply(
    double[::1] taps,
    long up,
    long down,
    double[::1] x,
    long n_out,
):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_out, dtype=np.float64)
    cdef double[::1] y = out
    cdef long n_taps = taps.shape[0]
    cdef long n_in = x.shape[0]
    cdef long center = (n_taps - 1) // 2
    cdef long n, m, phase, base, t, i
    cdef double acc

    for n in range(n_out):
        m = n * down + center
        phase = m % up
        base = m // up
        acc = 0.0
        t = phase
        i = base
        while t < n_taps:
            if 0 <= i < n_in:
                acc += taps[t] * x[i]
            t += up
            i -= 1
        y[n] = acc
    return out

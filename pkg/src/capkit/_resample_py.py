"""Pure-NumPy polyphase resampling kernel.

Fallback for capkit._resample_c; same contract, vectorized per filter
phase instead of looping over output samples.
"""

from __future__ import annotations

import numpy as np


def polyphase_apply(
    taps: np.ndarray, up: int, down: int, x: np.ndarray, n_out: int
) -> np.ndarray:
    n_taps = len(taps)
    center = (n_taps - 1) // 2
    out = np.zeros(n_out, dtype=np.float64)
    if n_out == 0 or len(x) == 0:
        return out

    m = np.arange(n_out, dtype=np.int64) * down + center
    phases = m % up
    bases = m // up
    max_phase_len = -(-n_taps // up)  # ceil

    # Zero-pad so every gathered index x[base - j] is in bounds.
    pad_left = max(0, max_phase_len - 1 - int(bases.min()))
    pad_right = max(0, int(bases.max()) - (len(x) - 1))
    xp = np.concatenate([np.zeros(pad_left), x, np.zeros(pad_right)])

    for phase in range(up):
        sel = np.nonzero(phases == phase)[0]
        if len(sel) == 0:
            continue
        ph_taps = taps[phase::up]
        k = len(ph_taps)
        # window rows: x[base], x[base-1], ..., x[base-k+1] (zero outside)
        idx = bases[sel, None] - np.arange(k)[None, :] + pad_left
        out[sel] = xp[idx] @ ph_taps
    return out

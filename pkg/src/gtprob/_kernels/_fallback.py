"""Numpy versions of the compiled kernels, used when the extension is absent."""
from __future__ import annotations

import math

import numpy as np

_ROWS = 256


def path_scan(logf: np.ndarray, log_threshold: float):
    logf = np.ascontiguousarray(logf, dtype=np.float64)
    c = np.cumsum(logf, axis=1)
    peak = np.maximum(c.max(axis=1, initial=-np.inf), 0.0) if c.shape[1] else np.zeros(len(c))
    final = c[:, -1] if c.shape[1] else np.zeros(len(c))
    return peak >= log_threshold, final.copy(), peak


def grid_extremes(a, la, b, lb, threshold, hkind, simplex, rest_w, rest_c):
    a, la, b, lb = (np.asarray(x, dtype=np.float64) for x in (a, la, b, lb))
    count = 0
    hmin, imin, jmin = math.inf, -1, -1
    hmax, imax, jmax = -math.inf, -1, -1
    for start in range(0, len(a), _ROWS):
        ai = a[start:start + _ROWS, None]
        l = la[start:start + _ROWS, None] + lb[None, :]
        ok = np.ones(l.shape, dtype=bool)
        if simplex:
            s = (1.0 - ai) - b[None, :]
            ok &= s >= 0.0
            if rest_w > 0.0:
                ok &= s > 0.0
                with np.errstate(divide="ignore", invalid="ignore"):
                    l = l + (rest_w * np.log(np.where(ok, s, 1.0)) - rest_c)
        ok &= l >= threshold
        if not ok.any():
            continue
        count += int(ok.sum())
        if hkind == 0:
            h = ai - b[None, :]
        else:
            h = (ai / (1.0 - ai)) * ((1.0 - b[None, :]) / b[None, :])
        hi = np.where(ok, h, -np.inf)
        k = int(np.argmax(hi))
        if hi.flat[k] > hmax:
            hmax, imax, jmax = float(hi.flat[k]), start + k // len(b), k % len(b)
        lo = np.where(ok, h, np.inf)
        k = int(np.argmin(lo))
        if lo.flat[k] < hmin:
            hmin, imin, jmin = float(lo.flat[k]), start + k // len(b), k % len(b)
    return count, hmin, imin, jmin, hmax, imax, jmax

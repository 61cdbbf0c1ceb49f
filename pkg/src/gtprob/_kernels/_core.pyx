# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics must match ``_fallback`` exactly."""
import numpy as np

from libc.math cimport log, INFINITY


def path_scan(const double[:, ::1] logf, double log_threshold):
    """Running log capital per row: (hit, final, peak).

    ``peak`` includes the starting value 0 (unit capital); ``hit`` is
    ``peak >= log_threshold``.
    """
    cdef Py_ssize_t P = logf.shape[0], T = logf.shape[1], i, t
    hit = np.zeros(P, dtype=np.bool_)
    final = np.empty(P, dtype=np.float64)
    peak = np.empty(P, dtype=np.float64)
    cdef unsigned char[::1] hv = hit.view(np.uint8)
    cdef double[::1] fv = final
    cdef double[::1] pv = peak
    cdef double c, m
    with nogil:
        for i in range(P):
            c = 0.0
            m = 0.0
            for t in range(T):
                c = c + logf[i, t]
                if c > m:
                    m = c
            fv[i] = c
            pv[i] = m
            hv[i] = m >= log_threshold
    return hit, final, peak


def grid_extremes(const double[::1] a, const double[::1] la,
                  const double[::1] b, const double[::1] lb,
                  double threshold, int hkind, bint simplex,
                  double rest_w, double rest_c):
    """Extremes of h(a_i, b_j) over grid pairs with log-ratio >= threshold.

    The log-ratio is ``la[i] + lb[j]``, plus ``rest_w*log(1-a-b) - rest_c``
    when ``simplex`` (pairs with a+b > 1 are skipped). ``hkind`` 0 is the
    difference a-b, 1 the odds ratio. Ties keep the first pair in row-major
    order. Returns (count, hmin, imin, jmin, hmax, imax, jmax).
    """
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef Py_ssize_t imin = -1, jmin = -1, imax = -1, jmax = -1
    cdef long long count = 0
    cdef double hmin = INFINITY, hmax = -INFINITY, l, s, h, oa, ai
    with nogil:
        for i in range(n):
            ai = a[i]
            if not simplex and la[i] < threshold:
                continue
            oa = ai / (1.0 - ai)
            for j in range(m):
                l = la[i] + lb[j]
                if simplex:
                    s = (1.0 - ai) - b[j]
                    if s < 0.0:
                        continue
                    if rest_w > 0.0:
                        if s <= 0.0:
                            continue
                        l = l + (rest_w * log(s) - rest_c)
                if l >= threshold:
                    count += 1
                    if hkind == 0:
                        h = ai - b[j]
                    else:
                        h = oa * ((1.0 - b[j]) / b[j])
                    if h > hmax:
                        hmax = h
                        imax = i
                        jmax = j
                    if h < hmin:
                        hmin = h
                        imin = i
                        jmin = j
    return count, hmin, imin, jmin, hmax, imax, jmax

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: RK4 shooting sweep and Sturm-sequence bisection."""

from libc.math cimport atan2, fabs, M_PI


def rk4_sweep(const double[::1] t, const double[::1] w_node,
              const double[::1] w_mid, double lam, double y1, double y2,
              double[:, ::1] out=None):
    """Integrate y1' = y2/w, y2' = -lam*w*y1 across the nodes ``t``.

    Returns the final state and the unwrapped angle atan2(y1, y2).
    """
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t k
    cdef double h, hh, wa, wm, wb
    cdef double a1, b1, a2, b2, a3, b3, a4, b4
    cdef double theta, prev, cur, d
    cdef bint record = out is not None

    theta = atan2(y1, y2)
    prev = theta
    if record:
        out[0, 0] = y1
        out[0, 1] = y2
    for k in range(n - 1):
        h = t[k + 1] - t[k]
        hh = 0.5 * h
        wa = w_node[k]
        wm = w_mid[k]
        wb = w_node[k + 1]
        a1 = y2 / wa
        b1 = -lam * wa * y1
        a2 = (y2 + hh * b1) / wm
        b2 = -lam * wm * (y1 + hh * a1)
        a3 = (y2 + hh * b2) / wm
        b3 = -lam * wm * (y1 + hh * a2)
        a4 = (y2 + h * b3) / wb
        b4 = -lam * wb * (y1 + h * a3)
        y1 = y1 + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        y2 = y2 + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        cur = atan2(y1, y2)
        d = cur - prev
        while d > M_PI:
            d -= 2.0 * M_PI
        while d < -M_PI:
            d += 2.0 * M_PI
        theta += d
        prev = cur
        if record:
            out[k + 1, 0] = y1
            out[k + 1, 1] = y2
    return y1, y2, theta


def sturm_count(const double[::1] d, const double[::1] e2, double x):
    """Number of eigenvalues below ``x`` of the symmetric tridiagonal (d, e)."""
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t count = 0
    cdef double q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = d[i] - x - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def smallest_eigenvalue(const double[::1] d, const double[::1] e2,
                        double lo, double hi, double rtol, int maxiter=400):
    cdef int it = 0
    cdef double mid
    while hi - lo > rtol * fabs(hi) and it < maxiter:
        mid = 0.5 * (lo + hi)
        if sturm_count(d, e2, mid) >= 1:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi)

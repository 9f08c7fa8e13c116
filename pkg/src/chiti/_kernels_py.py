"""Pure-Python twins of the routines in ``_kernels.pyx``.

Used when the compiled extension is unavailable or when
``CHITI_PURE_PYTHON=1`` is set.  Results agree with the extension to
rounding.
"""

import math


def rk4_sweep(t, w_node, w_mid, lam, y1, y2, out=None):
    """Integrate y1' = y2/w, y2' = -lam*w*y1 across the nodes ``t``.

    Returns the final state and the unwrapped angle atan2(y1, y2).
    """
    t = [float(x) for x in t]
    wn = [float(x) for x in w_node]
    wmid = [float(x) for x in w_mid]
    two_pi = 2.0 * math.pi
    theta = math.atan2(y1, y2)
    prev = theta
    rows = [(y1, y2)] if out is not None else None
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        hh = 0.5 * h
        wa, wm, wb = wn[k], wmid[k], wn[k + 1]
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
        cur = math.atan2(y1, y2)
        d = cur - prev
        while d > math.pi:
            d -= two_pi
        while d < -math.pi:
            d += two_pi
        theta += d
        prev = cur
        if rows is not None:
            rows.append((y1, y2))
    if out is not None:
        for k, (a, b) in enumerate(rows):
            out[k, 0] = a
            out[k, 1] = b
    return y1, y2, theta


def sturm_count(d, e2, x):
    """Number of eigenvalues below ``x`` of the symmetric tridiagonal (d, e)."""
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, len(d)):
        if q == 0.0:
            q = 1e-300
        q = d[i] - x - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def smallest_eigenvalue(d, e2, lo, hi, rtol, maxiter=400):
    d = [float(x) for x in d]
    e2 = [float(x) for x in e2]
    it = 0
    while hi - lo > rtol * abs(hi) and it < maxiter:
        mid = 0.5 * (lo + hi)
        if sturm_count(d, e2, mid) >= 1:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi)

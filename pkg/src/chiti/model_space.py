"""One-dimensional model space ``([0, L], |.|, m_{K,N})``.

The measure has density ``sin^{N-1}(t * sqrt(K/(N-1))) / c`` on
``[0, L]`` with ``L = pi * sqrt((N-1)/K)``.  Everything is computed in the
canonical normalization ``K = N-1`` (so ``L = pi``); a general ``K`` only
rescales radii by ``sqrt(K/(N-1))`` and eigenvalues by ``K/(N-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, gammaln

__all__ = [
    "DomainError",
    "ModelParams",
    "RadialGrid",
    "adaptive_simpson",
    "cumulative",
    "cumulative_simpson",
    "density",
    "isoperimetric_profile",
    "quantile",
    "radial_grid",
]


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


def _canonical_norm(N: float) -> float:
    # int_0^pi sin^{N-1} t dt = sqrt(pi) Gamma(N/2) / Gamma((N+1)/2)
    return math.exp(0.5 * math.log(math.pi) + gammaln(N / 2.0) - gammaln((N + 1.0) / 2.0))


@dataclass(frozen=True)
class ModelParams:
    """Curvature/dimension pair with the derived length and normalization."""

    K: float
    N: float
    L: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        K, N = float(self.K), float(self.N)
        if not (math.isfinite(K) and K > 0):
            raise DomainError(f"K must be > 0, got {self.K!r}")
        if not (math.isfinite(N) and N > 1):
            raise DomainError(f"N must be > 1, got {self.N!r}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", math.pi * math.sqrt((N - 1.0) / K))
        object.__setattr__(self, "c", _canonical_norm(N) / self.scale)

    @classmethod
    def canonical(cls, N: float) -> "ModelParams":
        """The ``K = N - 1`` model, for which ``L = pi``."""
        return cls(K=float(N) - 1.0, N=N)

    @property
    def scale(self) -> float:
        """Factor ``sqrt(K/(N-1))`` mapping radii to canonical radii."""
        return math.sqrt(self.K / (self.N - 1.0))

    @property
    def eigen_scale(self) -> float:
        """Factor ``K/(N-1)`` mapping canonical eigenvalues to this model."""
        return self.K / (self.N - 1.0)


@dataclass(frozen=True)
class RadialGrid:
    """Radii in ``[0, L]`` together with the probability density there."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)


def radial_grid(params: ModelParams, nodes) -> RadialGrid:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
        raise DomainError("grid nodes must be a strictly increasing 1-D array")
    return RadialGrid(nodes=nodes, weights=density(params, nodes))


def _check_radius(params, x, what="t"):
    x = np.asarray(x, dtype=float)
    slack = 1e-12 * params.L
    if np.any(~np.isfinite(x)) or np.any(x < -slack) or np.any(x > params.L + slack):
        raise DomainError(f"{what} must lie in [0, L] = [0, {params.L}]")
    return np.clip(x, 0.0, params.L)


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def density(params: ModelParams, t):
    """Probability density of ``m_{K,N}`` per unit radius at ``t``."""
    x = _check_radius(params, t)
    # fold in radius so the upper pole is as exact as the lower one
    folded = np.minimum(x, params.L - x) * params.scale
    out = np.sin(np.maximum(folded, 0.0)) ** (params.N - 1.0) / params.c
    out = np.where(folded <= 0.0, 0.0, out)
    return _scalar_or_array(out, t)


def _canonical_cumulative(N, theta):
    theta = np.asarray(theta, dtype=float)
    folded = np.minimum(theta, math.pi - theta)
    s2, c2 = np.sin(folded) ** 2, np.cos(folded) ** 2
    # I_x(a, b) = 1 - I_{1-x}(b, a); pass cos^2 directly where x = sin^2 is near 1
    half = 0.5 * np.where(
        s2 <= 0.5,
        betainc(N / 2.0, 0.5, s2),
        1.0 - betainc(0.5, N / 2.0, c2),
    )
    return np.where(theta <= 0.5 * math.pi, half, 1.0 - half)


def cumulative(params: ModelParams, x):
    """Mass ``m_{K,N}[0, x]``.

    Evaluated through the regularized incomplete beta function,
    ``int_0^theta sin^{N-1} = B(sin^2 theta; N/2, 1/2) / 2`` for
    ``theta <= pi/2``, and reflected for the upper half.
    """
    x = _check_radius(params, x, "x")
    return _scalar_or_array(_canonical_cumulative(params.N, x * params.scale), x)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) * (fa + 4.0 * fm + fb) / 6.0

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    if b == a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def cumulative_simpson(params: ModelParams, x: float, tol: float = 1e-12) -> float:
    """``m_{K,N}[0, x]`` by adaptive Simpson quadrature of the density.

    Slower than :func:`cumulative`; kept as an independent check.
    """
    x = float(_check_radius(params, x, "x"))
    scale, power, c, L = params.scale, params.N - 1.0, params.c, params.L

    def f(t):
        return math.sin(max(min(t, L - t), 0.0) * scale) ** power / c

    # split at the density peak so each half is monotone
    mid = 0.5 * params.L
    if x <= mid:
        return adaptive_simpson(f, 0.0, x, tol)
    return adaptive_simpson(f, 0.0, mid, 0.5 * tol) + adaptive_simpson(f, mid, x, 0.5 * tol)


def _canonical_quantile(N, v, iterations=200):
    v = np.asarray(v, dtype=float)
    lo = np.zeros_like(v)
    hi = np.full_like(v, math.pi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = _canonical_cumulative(N, mid) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(hi, 1e-300)):
            break
    return 0.5 * (lo + hi)


def quantile(params: ModelParams, v):
    """Radius ``r(v)`` with ``m_{K,N}[0, r(v)] = v``, by bisection."""
    arr = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("v must lie in the open interval (0, 1)")
    # bisect on the smaller tail; the density is symmetric about L/2
    upper = arr > 0.5
    theta = _canonical_quantile(params.N, np.where(upper, 1.0 - arr, arr))
    theta = np.where(upper, math.pi - theta, theta)
    return _scalar_or_array(theta / params.scale, v)


def isoperimetric_profile(params: ModelParams, v):
    """Least perimeter among sets of mass ``v``; realized by the cap ``[0, r(v)]``."""
    arr = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("v must lie in [0, 1]")
    inner = (arr > 0.0) & (arr < 1.0)
    out = np.zeros_like(arr)
    if np.any(inner):
        out[inner] = density(params, quantile(params, arr[inner]))
    return _scalar_or_array(out, v)

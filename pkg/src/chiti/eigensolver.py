"""First Dirichlet eigenpairs of ``-(w z')' = lam w z`` on the model space.

Caps ``[0, r(v)]`` and intervals ``(a, b)`` are handled by two-sided
shooting.  The state is ``(z, w z')`` with the unnormalized canonical weight
``w(t) = sin^{N-1}(t)``; the left and right shots meet at the midpoint and
the mismatch of their Pruefer angles, which increases strictly with
``lam`` and is negative at ``lam = 0``, vanishes exactly at the first
eigenvalue.  A pole (``t = 0`` or ``t = pi``) is a regular singular point;
the bounded solution is started from its power series.

``oracle_fd_eigen`` is an independent finite-volume discretization solved by
Sturm-sequence bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from . import _backend
from .model_space import (
    DomainError,
    ModelParams,
    RadialGrid,
    cumulative,
    quantile,
    radial_grid,
)

__all__ = [
    "AlphaSolution",
    "Cap",
    "EigenPair",
    "InfeasibleError",
    "Interval",
    "SolverError",
    "find_alpha",
    "first_eigen_cap",
    "first_eigen_interval",
    "oracle_fd_eigen",
]

DEFAULT_STEPS = 20000
# series start offset from a pole, as a fraction of the canonical length pi
POLE_OFFSET = 1e-4
# graded steps near a pole never exceed this fraction of the distance to it
GRADING = 0.1
MIN_STEPS_PER_DOMAIN = 2000


class SolverError(RuntimeError):
    """The eigenvalue could not be bracketed or the result is not a first eigenpair."""


class InfeasibleError(ValueError):
    """No cap of mass at most ``v_upper`` carries the requested eigenvalue."""


@dataclass(frozen=True)
class Cap:
    v: float

    def mass(self, params: ModelParams) -> float:
        return self.v


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def mass(self, params: ModelParams) -> float:
        return float(cumulative(params, self.b) - cumulative(params, self.a))


Domain = Union[Cap, Interval]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with the eigenfunction sampled on a radial grid.

    ``values`` are nonnegative, vanish at Dirichlet endpoints, and are
    normalized to ``z(0) = 1`` for caps and to a unit maximum otherwise.
    ``derivatives`` holds ``z'`` at the same nodes (absent for the oracle).
    """

    lam: float
    grid: RadialGrid
    values: np.ndarray
    domain: Domain
    params: ModelParams
    derivatives: np.ndarray | None = None

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def mass(self) -> float:
        return self.domain.mass(self.params)


@dataclass(frozen=True)
class AlphaSolution:
    alpha: float
    lam: float
    residual: float


# ---------------------------------------------------------------------------
# grids and series starts (canonical units: L = pi, w = sin^{N-1})


def _weight(N, t):
    return np.sin(t) ** (N - 1.0)


def _path(start, stop, dt, pole):
    """Nodes from ``start`` towards ``stop``; graded geometrically off a pole."""
    direction = 1.0 if stop > start else -1.0
    nodes = [start]
    if pole is not None:
        x = start
        while True:
            dist = abs(x - pole)
            step = GRADING * dist
            if step >= dt:
                break
            x = x + direction * step
            if direction * (stop - x) <= dt:
                break
            nodes.append(x)
    x = nodes[-1]
    n = max(1, int(math.ceil(abs(stop - x) / dt - 1e-9)))
    uniform = x + (stop - x) * np.arange(1, n + 1) / n
    uniform[-1] = stop
    return np.concatenate([np.asarray(nodes, dtype=float), uniform])


def _series_start(N, lam, h):
    """Bounded solution near a pole at distance ``h``: z(h), dz/dh."""
    a2 = -lam / (2.0 * N)
    a4 = lam * (lam - 2.0 * (N - 1.0) / 3.0) / (8.0 * N * (N + 2.0))
    z = 1.0 + a2 * h * h + a4 * h ** 4
    dz = 2.0 * a2 * h + 4.0 * a4 * h ** 3
    return z, dz


class _Shooter:
    """Two-sided shooting on the canonical interval ``[ta, tb]``."""

    def __init__(self, N, ta, tb, steps=DEFAULT_STEPS, match=0.5):
        self.N = N
        self.ta, self.tb = ta, tb
        self.left_pole = ta <= 0.0
        self.right_pole = tb >= math.pi
        if self.left_pole and self.right_pole:
            raise DomainError("the domain cannot contain both poles")
        dt = min(math.pi / steps, (tb - ta) / MIN_STEPS_PER_DOMAIN)
        self.h0 = min(POLE_OFFSET * math.pi, 0.01 * (tb - ta))
        tm = ta + match * (tb - ta)
        left_start = self.h0 if self.left_pole else ta
        right_start = math.pi - self.h0 if self.right_pole else tb
        self.left = _path(left_start, tm, dt, 0.0 if self.left_pole else None)
        self.right = _path(right_start, tm, dt, math.pi if self.right_pole else None)
        self.left_w = _weight(N, self.left)
        self.left_wm = _weight(N, 0.5 * (self.left[1:] + self.left[:-1]))
        self.right_w = _weight(N, self.right)
        self.right_wm = _weight(N, 0.5 * (self.right[1:] + self.right[:-1]))

    def _start(self, lam, side):
        if side == "left":
            if self.left_pole:
                z, dz = _series_start(self.N, lam, self.h0)
                return z, self.left_w[0] * dz
            return 0.0, 1.0
        if self.right_pole:
            z, dz = _series_start(self.N, lam, self.h0)
            # d/dt = -d/dh at t = pi - h
            return z, -self.right_w[0] * dz
        return 0.0, -1.0

    def sweep(self, lam, side, record=False):
        t, w, wm = ((self.left, self.left_w, self.left_wm) if side == "left"
                    else (self.right, self.right_w, self.right_wm))
        y1, y2 = self._start(lam, side)
        out = np.empty((len(t), 2)) if record else None
        end = _backend.rk4_sweep(t, w, wm, float(lam), float(y1), float(y2), out)
        return end, out

    def mismatch(self, lam):
        (_, _, th_l), _ = self.sweep(lam, "left")
        (_, _, th_r), _ = self.sweep(lam, "right")
        return th_l - th_r


def _solve_first(shooter, tol, lam_guess=None):
    f = shooter.mismatch
    lo = 0.0
    if f(lo) >= 0.0:
        raise SolverError("shooting mismatch is not negative at lam = 0")
    hi = lam_guess if lam_guess else (math.pi / (shooter.tb - shooter.ta)) ** 2
    f_hi = f(hi)
    expansions = 0
    while f_hi <= 0.0:
        lo, hi = hi, 2.0 * hi
        f_hi = f(hi)
        expansions += 1
        if expansions > 200:
            raise SolverError("could not bracket the first eigenvalue")
    return brentq(f, lo, hi, xtol=1e-15, rtol=max(tol, 1e-15), maxiter=200)


def _assemble(shooter, lam):
    (_, _, _), left = shooter.sweep(lam, "left", record=True)
    (_, _, _), right = shooter.sweep(lam, "right", record=True)
    zl, zr = left[:, 0], right[:, 0]
    if zr[-1] == 0.0:
        raise SolverError("right shot vanishes at the matching point")
    factor = zl[-1] / zr[-1]
    N = shooter.N
    nodes = np.concatenate([shooter.left, shooter.right[-2::-1]])
    z = np.concatenate([zl, factor * zr[-2::-1]])
    flux = np.concatenate([left[:, 1], factor * right[-2::-1, 1]])
    dz = flux / _weight(N, nodes)
    if shooter.left_pole:
        nodes = np.concatenate([[0.0], nodes])
        z = np.concatenate([[1.0], z])
        dz = np.concatenate([[0.0], dz])
    if shooter.right_pole:
        z0, _ = _series_start(N, lam, 0.0)
        nodes = np.concatenate([nodes, [math.pi]])
        z = np.concatenate([z, [factor * z0]])
        dz = np.concatenate([dz, [0.0]])
    return nodes, z, dz


def _check_positive(z, dz, cap):
    scale = np.max(np.abs(z))
    interior = z[1:-1]
    if np.any(interior <= -1e-10 * scale):
        raise SolverError("shot eigenfunction changes sign: not the first eigenvalue")
    if cap and np.any(np.diff(z) > 1e-10 * scale):
        raise SolverError("cap eigenfunction is not non-increasing")


def first_eigen_interval(params: ModelParams, a: float, b: float, tol: float = 1e-12,
                         steps: int = DEFAULT_STEPS, match: float = 0.5,
                         lam_guess: float | None = None, domain: Domain | None = None) -> EigenPair:
    """First Dirichlet eigenpair of the interval ``(a, b)`` of the model space.

    An endpoint on a pole (``0`` or ``L``) carries no boundary condition:
    the bounded solution is used there.  ``match`` sets where the two shots
    meet, as a fraction of the interval; ``lam_guess`` replaces the initial
    bracket guess ``(pi/(b-a))^2``.
    """
    a, b = float(a), float(b)
    L = params.L
    if not (0.0 <= a < b <= L) or not all(map(math.isfinite, (a, b))):
        raise DomainError(f"need 0 <= a < b <= L = {L}, got a={a}, b={b}")
    if a <= 0.0 and b >= L:
        raise DomainError("the interval cannot be the whole model space")
    if not 0.0 < match < 1.0:
        raise DomainError("match must lie in (0, 1)")
    s = params.scale
    ta, tb = a * s, (math.pi if b >= L else b * s)
    if tb - ta < 1e-12:
        raise DomainError("degenerate interval")
    shooter = _Shooter(params.N, ta, tb, steps=steps, match=match)
    guess = None if lam_guess is None else lam_guess / params.eigen_scale
    lam = _solve_first(shooter, tol, guess)
    nodes, z, dz = _assemble(shooter, lam)
    cap = shooter.left_pole
    if not cap:
        peak = np.max(z)
        z, dz = z / peak, dz / peak
    # the Dirichlet endpoints are exact zeros
    if not shooter.left_pole:
        z[0] = 0.0
    if not shooter.right_pole:
        z[-1] = 0.0
    _check_positive(z, dz, cap)
    z = np.maximum(z, 0.0)
    x = nodes / s
    x[-1] = min(x[-1], L)
    return EigenPair(
        lam=lam * params.eigen_scale,
        grid=radial_grid(params, x),
        values=z,
        domain=domain if domain is not None else Interval(a, b),
        params=params,
        derivatives=dz * s,
    )


def first_eigen_cap(params: ModelParams, v: float, tol: float = 1e-12,
                    steps: int = DEFAULT_STEPS, **kwargs) -> EigenPair:
    """First Dirichlet eigenpair of the cap ``[0, r(v)]``, normalized to ``z(0) = 1``."""
    if not 0.0 < v < 1.0:
        raise DomainError("v must lie in (0, 1)")
    r = float(quantile(params, v))
    return first_eigen_interval(params, 0.0, r, tol=tol, steps=steps, domain=Cap(float(v)), **kwargs)


def first_eigen(params: ModelParams, domain: Domain, **kwargs) -> EigenPair:
    if isinstance(domain, Cap):
        return first_eigen_cap(params, domain.v, **kwargs)
    return first_eigen_interval(params, domain.a, domain.b, **kwargs)


# ---------------------------------------------------------------------------
# matched cap mass


def _rk4_step(N, lam, t, y1, y2, h):
    def rhs(t, y1, y2):
        w = math.sin(t) ** (N - 1.0)
        return y2 / w, -lam * w * y1

    a1, b1 = rhs(t, y1, y2)
    a2, b2 = rhs(t + 0.5 * h, y1 + 0.5 * h * a1, y2 + 0.5 * h * b1)
    a3, b3 = rhs(t + 0.5 * h, y1 + 0.5 * h * a2, y2 + 0.5 * h * b2)
    a4, b4 = rhs(t + h, y1 + h * a3, y2 + h * b3)
    return (y1 + h * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0,
            y2 + h * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0)


def _first_zero(N, lam, steps):
    """First zero in (0, pi) of the bounded solution started at the pole 0."""
    dt = math.pi / steps
    h0 = POLE_OFFSET * math.pi
    t = _path(h0, math.pi - h0, dt, 0.0)
    w = _weight(N, t)
    wm = _weight(N, 0.5 * (t[1:] + t[:-1]))
    z, dz = _series_start(N, lam, h0)
    out = np.empty((len(t), 2))
    _backend.rk4_sweep(t, w, wm, float(lam), z, w[0] * dz, out)
    neg = np.nonzero(out[:, 0] <= 0.0)[0]
    if len(neg) == 0:
        return None
    k = neg[0] - 1
    y1, y2 = out[k]
    if out[k + 1, 0] == 0.0:
        return float(t[k + 1])

    def g(h):
        return _rk4_step(N, lam, t[k], y1, y2, h)[0]

    h = brentq(g, 0.0, t[k + 1] - t[k], xtol=1e-16, rtol=1e-15)
    return float(t[k] + h)


def find_alpha(params: ModelParams, lam: float, v_upper: float, tol: float = 1e-8,
               steps: int = DEFAULT_STEPS) -> AlphaSolution:
    """Mass ``alpha <= v_upper`` of the cap whose first eigenvalue is ``lam``.

    ``r(alpha)`` is the first zero of the bounded solution from the pole at
    eigenvalue ``lam``; the residual is measured by re-solving on that cap.
    """
    if not 0.0 < v_upper < 1.0:
        raise DomainError("v_upper must lie in (0, 1)")
    if not lam > 0.0:
        raise DomainError("lam must be positive")
    zero = _first_zero(params.N, lam / params.eigen_scale, steps)
    alpha = None if zero is None else float(cumulative(params, zero / params.scale))
    if alpha is None or alpha > v_upper:
        lam_upper = first_eigen_cap(params, v_upper, steps=steps).lam
        if lam < lam_upper * (1.0 - tol):
            raise InfeasibleError(
                f"lam = {lam} is below the cap eigenvalue {lam_upper} at v = {v_upper}"
            )
        alpha = v_upper
    check = first_eigen_cap(params, alpha, steps=steps).lam
    residual = abs(check - lam)
    if residual >= tol * lam:
        raise SolverError(f"alpha residual {residual:.3e} exceeds {tol:g} * lam")
    return AlphaSolution(alpha=alpha, lam=float(lam), residual=residual)


# ---------------------------------------------------------------------------
# finite-volume oracle


def oracle_fd_eigen(params: ModelParams, domain: Domain, n: int = 4000, rtol: float = 1e-14) -> EigenPair:
    """First eigenpair from a uniform-grid finite-volume discretization.

    Fluxes use the weight at cell midpoints, masses are lumped at nodes, a
    pole node keeps a half cell.  The smallest eigenvalue of the symmetric
    tridiagonal pencil is isolated by bisection on Sturm counts and the
    eigenvector by inverse iteration.  Converges as ``O(h^2)``.
    """
    if n < 50:
        raise DomainError("the oracle needs n >= 50")
    N, s = params.N, params.scale
    if isinstance(domain, Cap):
        if not 0.0 < domain.v < 1.0:
            raise DomainError("v must lie in (0, 1)")
        ta, tb = 0.0, float(quantile(params, domain.v)) * s
    else:
        if not 0.0 <= domain.a < domain.b <= params.L:
            raise DomainError("need 0 <= a < b <= L")
        ta, tb = domain.a * s, min(domain.b * s, math.pi)
        if domain.b >= params.L:
            tb = math.pi
    left_pole, right_pole = ta <= 0.0, tb >= math.pi
    if left_pole and right_pole:
        raise DomainError("the domain cannot contain both poles")
    h = (tb - ta) / n
    t = ta + h * np.arange(n + 1)
    t[-1] = tb
    k_half = _weight(N, 0.5 * (t[1:] + t[:-1])) / h  # n edge conductances
    mass = h * _weight(N, t)
    if left_pole:
        mass[0] = 0.5 * h * _weight(N, ta + 0.25 * h)
    if right_pole:
        mass[-1] = 0.5 * h * _weight(N, tb - 0.25 * h)
    diag = np.zeros(n + 1)
    diag[:-1] += k_half
    diag[1:] += k_half
    off = -k_half
    first = 0 if left_pole else 1
    last = n if right_pole else n - 1
    idx = slice(first, last + 1)
    A_d = diag[idx]
    A_e = off[first:last]
    M = mass[idx]
    root = np.sqrt(M)
    d = A_d / M
    e = A_e / (root[:-1] * root[1:])
    e2 = e * e
    radius = np.abs(d) + np.concatenate([[0.0], np.abs(e)]) + np.concatenate([np.abs(e), [0.0]])
    lam = _backend.smallest_eigenvalue(d, e2, 0.0, float(np.max(radius)), rtol)
    # inverse iteration with a slightly lowered shift
    shift = lam * (1.0 - 1e-10)
    ab = np.zeros((3, len(d)))
    ab[0, 1:] = e
    ab[1, :] = d - shift
    ab[2, :-1] = e
    x = np.ones(len(d))
    for _ in range(3):
        x = solve_banded((1, 1), ab, x)
        x /= np.max(np.abs(x))
    z_inner = x / root
    z = np.zeros(n + 1)
    z[idx] = z_inner
    if z[np.argmax(np.abs(z))] < 0:
        z = -z
    z = z / (z[0] if left_pole else np.max(z))
    nodes = t / s
    nodes[-1] = min(nodes[-1], params.L)
    return EigenPair(
        lam=float(lam) * params.eigen_scale,
        grid=radial_grid(params, nodes),
        values=z,
        domain=domain,
        params=params,
    )

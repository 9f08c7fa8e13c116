"""Quantitative diagnostics near the equality case.

With ``u`` and ``z`` both normalized to unit ``L^1`` norm, ``delta`` bounds
``||z||_q - ||u||_q`` over a geometric exponent tail ending at ``q = inf``.
Small ``delta`` forces ``u#`` to be small just past ``alpha`` and some
superlevel set of ``u`` to be almost isoperimetric.  This module computes
those quantities, superlevel perimeters and the coarea identity for
eigenfunctions on intervals of the model space.

No constant that is only known to exist is ever evaluated: the perimeter
excess is reported as ``(ratio - 1) / sqrt(delta)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .comparison import ChitiRun, decode_exponent, encode_exponent, prepare
from .eigensolver import DEFAULT_STEPS, EigenPair, Interval
from .model_space import DomainError, ModelParams, cumulative, density, isoperimetric_profile
from .rearrangement import StepProfile, _hermite, _hermite_slope, lp_norm

__all__ = [
    "DEFAULT_Q_GRID",
    "CoareaResult",
    "PerimeterProbe",
    "PreconditionError",
    "SampledFunction",
    "StabilityReport",
    "WindowOverflowError",
    "Witness",
    "coarea_check",
    "delta_tilde_conditions",
    "gap_profile",
    "mean_value_witness",
    "normalize_l1",
    "perimeter_ratio_probe",
    "stability_analysis",
    "superlevel_mass",
    "superlevel_perimeter_1d",
    "sweep_caps_to_interval",
    "sweep_to_csv",
]

DEFAULT_Q_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, math.inf)

OUTSIDE = "outside stability regime"


class PreconditionError(ValueError):
    """Inputs violate a documented precondition."""


class WindowOverflowError(ValueError):
    """The averaging window ``(alpha, alpha + sqrt(delta))`` leaves ``[0, v]``."""


# ---------------------------------------------------------------------------
# gap profile


@dataclass(frozen=True)
class StabilityReport:
    """Gap profile and the intermediate quantities of the stability chain.

    ``gaps[i] = ||z||_q - ||u||_q`` at ``q = q_grid[i]`` with unit ``L^1``
    norms.  ``diam_bound_exponent`` is ``N``: the diameter deficit is
    controlled in the form ``(pi - diam)^N <= C sqrt(delta)`` with a
    constant that is not computed.
    """

    q_grid: tuple
    gaps: tuple
    delta: float
    sup_gap: float
    y: float | None = None
    u_at_y: float | None = None
    perimeter_ratio: float | None = None
    diam_bound_exponent: float | None = None
    t0: float | None = None
    c_fit: float | None = None
    window: str | None = None
    status: str = "partial"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["q_grid"] = [encode_exponent(q) for q in self.q_grid]
        out["gaps"] = list(self.gaps)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityReport":
        data = dict(data)
        data["q_grid"] = tuple(decode_exponent(q) for q in data["q_grid"])
        data["gaps"] = tuple(float(g) for g in data["gaps"])
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StabilityReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Header ``q,gap``; ``q = inf`` is written as ``inf``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["q", "gap"])
        for q, g in zip(self.q_grid, self.gaps):
            writer.writerow([encode_exponent(q), repr(g)])
        return buf.getvalue()


def normalize_l1(prof: StepProfile) -> StepProfile:
    total = prof.integral()
    if not total > 0:
        raise PreconditionError("profile vanishes identically")
    return prof.scaled(1.0 / total)


def gap_profile(u_prof: StepProfile, z_prof: StepProfile, q_grid=DEFAULT_Q_GRID,
                tol: float = 1e-9) -> StabilityReport:
    """Norm gaps of two unit-``L^1`` profiles; fills ``gaps``, ``delta`` and ``sup_gap``."""
    for name, prof in (("u", u_prof), ("z", z_prof)):
        if abs(prof.integral() - 1.0) > tol:
            raise PreconditionError(f"{name} must have unit L^1 norm, got {prof.integral()!r}")
    qs = tuple(decode_exponent(q) for q in q_grid)
    if not qs or any(not q >= 1 for q in qs):
        raise DomainError("q_grid must be nonempty with every q >= 1")
    gaps = tuple(lp_norm(z_prof, q) - lp_norm(u_prof, q) for q in qs)
    return StabilityReport(
        q_grid=qs,
        gaps=gaps,
        delta=max(0.0, max(gaps)),
        sup_gap=z_prof.sup - u_prof.sup,
    )


# ---------------------------------------------------------------------------
# mean value witness


@dataclass(frozen=True)
class Witness:
    """``u#(y)`` equals the mean of ``u#`` over ``(alpha, alpha + sqrt(delta))``.

    ``y`` is ``None`` in the equality case ``delta = 0``.  ``extended`` is
    set when the window passes ``v`` and ``u#`` was continued by zero.
    """

    y: float | None
    u_at_y: float | None
    bound: float
    extended: bool = False

    @property
    def holds(self) -> bool:
        return self.u_at_y is None or self.u_at_y <= self.bound


def mean_value_witness(u_sharp: StepProfile, alpha: float, delta: float, v: float | None = None,
                       extend: bool = False, tol: float = 1e-6) -> Witness:
    """Point ``y`` in the window where ``u#`` takes its mean over the window.

    The bound ``v sqrt(delta) + tol`` is recorded in ``Witness.bound``.
    A window reaching past ``v`` raises :class:`WindowOverflowError` unless
    ``extend`` is set, in which case ``u#`` is taken to vanish beyond ``v``.
    """
    v = u_sharp.total if v is None else float(v)
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    if delta == 0:
        return Witness(None, None, tol)
    width = math.sqrt(delta)
    lo, hi = float(alpha), float(alpha) + width
    bound = v * width + tol
    overflow = hi > v
    if overflow and not extend:
        raise WindowOverflowError(f"alpha + sqrt(delta) = {hi} exceeds v = {v}")
    mean = u_sharp.integral_between(lo, min(hi, v)) / width
    b, lv = u_sharp.breakpoints, u_sharp.levels
    # pieces meeting the window, plus the zero continuation past v
    first = int(np.searchsorted(b, lo, side="right")) - 1
    last = int(np.searchsorted(b, min(hi, v), side="left"))
    starts = list(np.maximum(b[first:last], lo))
    levels = list(lv[first:last])
    if overflow:
        starts.append(v)
        levels.append(0.0)
    above = [i for i, lev in enumerate(levels) if lev > mean * (1 + 1e-12)]
    below = [i for i, lev in enumerate(levels) if lev < mean * (1 - 1e-12)]
    if not above or not below:
        y = 0.5 * (lo + hi)
    else:
        y = float(starts[above[-1] + 1])
    return Witness(float(y), float(mean), float(bound), overflow)


def delta_tilde_conditions(z0: float, delta: float, v: float) -> tuple:
    """The two smallness conditions on ``delta`` relative to ``z#(0)``."""
    return (z0 - delta > z0 / 2.0, z0 / 2.0 - v * math.sqrt(delta) > z0 / 4.0)


# ---------------------------------------------------------------------------
# level sets of sampled eigenfunctions


@dataclass(frozen=True)
class SampledFunction:
    """A function on ``[x[0], x[-1]]`` inside the model space, optionally with ``u'``."""

    params: ModelParams
    x: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray | None = None

    @classmethod
    def of(cls, pair: EigenPair, scale: float = 1.0) -> "SampledFunction":
        d = None if pair.derivatives is None else pair.derivatives * scale
        return cls(pair.params, pair.nodes, pair.values * scale, d)


def _as_sampled(u) -> SampledFunction:
    if isinstance(u, SampledFunction):
        return u
    if isinstance(u, EigenPair):
        return SampledFunction.of(u)
    raise TypeError(f"expected SampledFunction or EigenPair, got {type(u).__name__}")


def _crossing(f, i, t, hermite):
    """Point in ``[x_i, x_{i+1}]`` where the interpolant equals ``t``."""
    x, u = f.x, f.values
    if not hermite:
        lam = (t - u[i]) / (u[i + 1] - u[i])
        return float(x[i] + lam * (x[i + 1] - x[i]))
    d = f.derivatives
    args = (x[i], x[i + 1], u[i], u[i + 1], d[i], d[i + 1])
    lo, hi = 0.0, 1.0
    rising = u[i + 1] > u[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if (_hermite(*args, mid) < t) == rising:
            lo = mid
        else:
            hi = mid
    return float(x[i] + 0.5 * (lo + hi) * (x[i + 1] - x[i]))


def _superlevel_intervals(f: SampledFunction, t: float, hermite: bool):
    """``{u >= t}`` as a list of ``(left, right)`` pairs."""
    inside = f.values >= t
    if not np.any(inside):
        return []
    out = []
    start = f.x[0] if inside[0] else None
    for i in np.nonzero(inside[1:] != inside[:-1])[0]:
        if inside[i + 1]:
            start = _crossing(f, i, t, hermite)
        else:
            out.append((start, _crossing(f, i, t, hermite)))
            start = None
    if start is not None:
        out.append((start, f.x[-1]))
    return [(float(a), float(b)) for a, b in out]


def _perimeter(params, intervals):
    L = params.L
    ends = [p for ab in intervals for p in ab if 0.0 < p < L]
    return math.fsum(float(density(params, p)) for p in ends)


def superlevel_perimeter_1d(u, t: float, hermite: bool | None = None) -> float:
    """Perimeter of ``{u > t}``: model density summed over its boundary points.

    Boundary points on the poles ``0`` and ``L`` carry no perimeter.  With
    derivatives available the level points come from the cubic Hermite
    interpolant, otherwise from linear interpolation.
    """
    f = _as_sampled(u)
    if hermite is None:
        hermite = f.derivatives is not None
    if t >= float(np.max(f.values)):
        return 0.0
    return _perimeter(f.params, _superlevel_intervals(f, t, hermite))


def superlevel_mass(u, t: float, hermite: bool | None = None) -> float:
    """``mu_u(t)``, the model mass of ``{u > t}``."""
    f = _as_sampled(u)
    if hermite is None:
        hermite = f.derivatives is not None
    if t >= float(np.max(f.values)):
        return 0.0
    ivs = _superlevel_intervals(f, t, hermite)
    return math.fsum(float(cumulative(f.params, b) - cumulative(f.params, a)) for a, b in ivs)


# ---------------------------------------------------------------------------
# coarea identity


@dataclass(frozen=True)
class CoareaResult:
    """``lhs = int_{t_lo < u < t_hi} |u'| dm`` and ``rhs = int_{t_lo}^{t_hi} Per({u > s}) ds``."""

    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if scale == 0 else abs(self.lhs - self.rhs) / scale


def _trapezoid(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _peak(f: SampledFunction):
    """Location and value of the maximum of the Hermite interpolant.

    Returns ``(x, u, per)`` where ``per`` is the limit of the superlevel
    perimeter as the level rises to the maximum.
    """
    x, u, d = f.x, f.values, f.derivatives
    k = int(np.argmax(u))
    best = (float(x[k]), float(u[k]))
    for i in (k - 1, k):
        if 0 <= i < len(x) - 1 and d[i] > 0 > d[i + 1]:
            args = (x[i], x[i + 1], u[i], u[i + 1], d[i], d[i + 1])
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _hermite_slope(*args, mid) > 0:
                    lo = mid
                else:
                    hi = mid
            theta = 0.5 * (lo + hi)
            val = float(_hermite(*args, theta))
            if val > best[1]:
                best = (float(x[i] + theta * (x[i + 1] - x[i])), val)
    xp = best[0]
    # an interior peak is approached from both sides
    sides = 2 if x[0] < xp < x[-1] else 1
    per = sides * float(density(f.params, xp)) if 0.0 < xp < f.params.L else 0.0
    return xp, best[1], per


def coarea_check(u, t_lo: float | None = None, t_hi: float | None = None) -> CoareaResult:
    """Both sides of the coarea identity by second-order quadrature.

    The left side integrates the sampled ``|u'|`` against the model density
    with the trapezoidal rule, split where ``u'`` changes sign; the right
    side integrates perimeters of the piecewise-linear interpolant over the
    sample levels, continued up to the maximum of the Hermite interpolant.
    The two rules err independently, so the residual decays as ``O(h^2)``.
    ``t_lo`` and ``t_hi`` default to the smallest sample value and the
    maximum.
    """
    f = _as_sampled(u)
    if f.derivatives is None:
        raise DomainError("the coarea check needs derivative samples")
    params, x, val, sder = f.params, f.x, f.values, f.derivatives
    top = float(np.max(val))
    if top == float(np.min(val)):
        return CoareaResult(0.0, 0.0)
    _, umax, per_top = _peak(f)
    t_lo = float(np.min(val)) if t_lo is None else float(t_lo)
    t_hi = umax if t_hi is None else min(float(t_hi), umax)
    if t_hi <= t_lo:
        return CoareaResult(0.0, 0.0)
    # left side: refine the grid with the cut points of t_lo and t_hi and
    # the zeros of u'
    pts, vals, ders = [x[0]], [val[0]], [abs(sder[0])]
    for i in range(len(x) - 1):
        u0, u1, d0, d1 = val[i], val[i + 1], sder[i], sder[i + 1]
        cuts = []
        for t in (t_lo, t_hi):
            if (u0 - t) * (u1 - t) < 0:
                cuts.append((t - u0) / (u1 - u0))
        if d0 * d1 < 0:
            cuts.append(d0 / (d0 - d1))
        for lam in sorted(cuts):
            pts.append(x[i] + lam * (x[i + 1] - x[i]))
            vals.append(u0 + lam * (u1 - u0))
            ders.append(abs(d0 + lam * (d1 - d0)))
        pts.append(x[i + 1])
        vals.append(u1)
        ders.append(abs(d1))
    pts, vals, ders = np.array(pts), np.array(vals), np.array(ders)
    g = ders * density(params, pts)
    mids = 0.5 * (vals[1:] + vals[:-1])
    band = (mids >= t_lo) & (mids <= t_hi)
    lhs = float(np.sum((0.5 * (g[1:] + g[:-1]) * np.diff(pts))[band]))
    # right side: perimeters at every sample level in the band
    hi = min(t_hi, top)
    levels = np.unique(np.concatenate([[t_lo, hi], val[(val > t_lo) & (val < hi)]]))
    per = np.array([_perimeter(params, _superlevel_intervals(f, s, False)) for s in levels])
    rhs = _trapezoid(per, levels)
    if t_hi > top:
        rhs += 0.5 * (per[-1] + per_top) * (t_hi - top)
    return CoareaResult(lhs, rhs)


# ---------------------------------------------------------------------------
# perimeter ratio


@dataclass(frozen=True)
class PerimeterProbe:
    """``ratio = Per({u > t0})^2 / I(mu_u(t0))^2`` at the minimizing level ``t0``."""

    t0: float
    ratio: float
    mean_ratio: float
    c_fit: float | None
    in_regime: bool


def _ratio(f, t, hermite):
    ivs = _superlevel_intervals(f, t, hermite)
    per = _perimeter(f.params, ivs)
    mass = math.fsum(float(cumulative(f.params, b) - cumulative(f.params, a)) for a, b in ivs)
    iso = float(isoperimetric_profile(f.params, min(max(mass, 0.0), 1.0)))
    if iso <= 0.0:
        return math.inf
    return (per / iso) ** 2


def perimeter_ratio_probe(u, t_lo: float, t_hi: float, delta: float, z0: float, v: float,
                          samples: int = 256) -> PerimeterProbe:
    """Minimize the squared perimeter-to-profile ratio over levels in ``(t_lo, t_hi)``.

    ``t_lo = u#(y)`` and ``t_hi = u#(0)`` in the scale of ``u``.  The
    minimum never exceeds the average, which is what the stability chain
    bounds.  ``in_regime`` records the two smallness conditions on
    ``delta``; ``c_fit = (ratio - 1) / sqrt(delta)``.
    """
    f = _as_sampled(u)
    hermite = f.derivatives is not None
    if not t_hi > t_lo:
        raise DomainError("need t_lo < t_hi")
    ts = t_lo + (t_hi - t_lo) * (np.arange(samples) + 0.5) / samples
    rs = np.array([_ratio(f, t, hermite) for t in ts])
    k = int(np.argmin(rs))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, samples - 1)]
    t0, best = float(ts[k]), float(rs[k])
    if hi > lo:
        res = minimize_scalar(lambda t: _ratio(f, t, hermite), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(abs(t_hi), 1.0)})
        if res.fun < best:
            t0, best = float(res.x), float(res.fun)
    finite = rs[np.isfinite(rs)]
    mean_ratio = float(np.mean(finite)) if len(finite) else math.inf
    c_fit = (best - 1.0) / math.sqrt(delta) if delta > 0 else None
    return PerimeterProbe(t0, best, mean_ratio, c_fit, all(delta_tilde_conditions(z0, delta, v)))


# ---------------------------------------------------------------------------
# pipeline and sweep


def stability_analysis(run: ChitiRun, q_grid=DEFAULT_Q_GRID, witness_tol: float = 1e-6,
                       tol_eq: float = 1e-8) -> StabilityReport:
    """Full stability report for a prepared comparison run.

    ``delta <= tol_eq`` is the equality case: the witness is skipped and
    the perimeter ratio is taken over all levels.  A window reaching past
    ``v`` uses the zero continuation of ``u#`` and is marked ``"extended"``.
    """
    cu = 1.0 / run.u_sharp.integral()
    u1, z1 = run.u_sharp.scaled(cu), normalize_l1(run.z_sharp)
    rep = gap_profile(u1, z1, q_grid)
    alpha, v = run.alpha.alpha, run.v
    f = SampledFunction.of(run.u, cu)
    if rep.delta <= tol_eq:
        probe = perimeter_ratio_probe(f, 0.0, u1.sup, rep.delta, z1.sup, v)
        return _replace(rep, perimeter_ratio=probe.ratio, diam_bound_exponent=run.params.N,
                        t0=probe.t0, status="rigid")
    wit = mean_value_witness(u1, alpha, rep.delta, v, extend=True, tol=witness_tol)
    probe = perimeter_ratio_probe(f, wit.u_at_y, u1.sup, rep.delta, z1.sup, v)
    return _replace(
        rep,
        y=wit.y,
        u_at_y=wit.u_at_y,
        perimeter_ratio=probe.ratio,
        diam_bound_exponent=run.params.N,
        t0=probe.t0,
        c_fit=probe.c_fit,
        window="extended" if wit.extended else "inside",
        status="ok" if probe.in_regime else OUTSIDE,
    )


def _replace(rep: StabilityReport, **kw) -> StabilityReport:
    data = asdict(rep)
    data.update(kw)
    return StabilityReport(**data)


SWEEP_FIELDS = ("k", "a", "b", "v", "alpha", "delta", "sqrt_delta", "perimeter_ratio", "c_fit", "status")


def sweep_caps_to_interval(params: ModelParams, n: int, a: float = 0.5, b: float = 2.6,
                           cells: int = 4000, steps: int = DEFAULT_STEPS, q_grid=DEFAULT_Q_GRID) -> list:
    """Stability rows for ``(a (1 - k/n), b)``, ``k = 0, ..., n-1``.

    The left end moves towards the pole, so the intervals approach the cap
    ``[0, b]``; rows are in that order.
    """
    if n < 1:
        raise DomainError("n must be positive")
    rows = []
    for k in range(n):
        ak = a * (1.0 - k / n)
        run = prepare(params, Interval(ak, b), cells=cells, steps=steps)
        rep = stability_analysis(run, q_grid)
        rows.append({
            "k": k,
            "a": ak,
            "b": b,
            "v": run.v,
            "alpha": run.alpha.alpha,
            "delta": rep.delta,
            "sqrt_delta": math.sqrt(rep.delta),
            "perimeter_ratio": rep.perimeter_ratio,
            "c_fit": rep.c_fit,
            "status": rep.status,
        })
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()

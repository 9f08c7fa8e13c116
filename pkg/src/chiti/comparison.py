"""Comparison of an eigenfunction with the matched model eigenfunction.

For a domain ``Omega`` of mass ``v`` with first eigenvalue ``lam``, the
model cap of mass ``alpha <= v`` carrying the same eigenvalue has an
eigenfunction ``z``.  After scaling ``z`` so that the ``L^p`` norms agree,
``z# - u#`` changes sign once, the partial integrals of ``(z#)^p`` dominate
those of ``(u#)^p``, and ``||u||_q / ||u||_p <= ||z||_q / ||z||_p`` for every
``q >= p``, with equality only when ``alpha = v``.

All checks here work on :class:`~chiti.rearrangement.StepProfile` data;
:func:`prepare` builds the two profiles on one mass grid and
:func:`analyze` runs every check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import (
    DEFAULT_STEPS,
    AlphaSolution,
    Cap,
    EigenPair,
    find_alpha,
    first_eigen,
    first_eigen_cap,
)
from .model_space import DomainError, ModelParams, cumulative, density, quantile
from .rearrangement import (
    SmoothRearrangement,
    StepProfile,
    lp_norm,
    mass_grid,
    profile_from_function,
)

__all__ = [
    "ChitiAnalysis",
    "ChitiReport",
    "ChitiRun",
    "CrossingResult",
    "DegenerateInputError",
    "DifferentialCheck",
    "DominationResult",
    "HardyResult",
    "MarginResult",
    "RigidityResult",
    "Tolerances",
    "analyze",
    "crossing_analysis",
    "cumulative_domination",
    "decode_exponent",
    "desk_rigidity_probe",
    "differential_check",
    "domination_check",
    "encode_exponent",
    "hardy_hypothesis_check",
    "prepare",
    "reverse_holder_check",
    "scale_to_match",
]


class DegenerateInputError(ValueError):
    """A profile vanishes identically where a positive one is required."""


@dataclass(frozen=True)
class Tolerances:
    """``num`` bounds negative slack, ``eq`` detects equality, ``band`` is
    the crossing dead-band relative to ``||z||_inf``."""

    num: float = 1e-6
    eq: float = 1e-8
    band: float = 1e-8

    def __post_init__(self):
        for name in ("num", "eq", "band"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"tolerance {name} must be nonnegative")


def encode_exponent(q: float):
    return "inf" if math.isinf(q) else float(q)


def decode_exponent(q) -> float:
    if isinstance(q, str):
        return float(q.strip().lower().replace("infinity", "inf"))
    return float(q)


# ---------------------------------------------------------------------------
# profile utilities


def _common_pieces(f: StepProfile, g: StepProfile):
    """Merged breakpoints and the levels of ``f`` and ``g`` on each piece."""
    b = np.union1d(f.breakpoints, g.breakpoints)
    mid = 0.5 * (b[1:] + b[:-1])
    return b, f(mid), g(mid)


def _positive_integral(prof: StepProfile, p: float) -> float:
    total = prof.integral(p)
    if not total > 0:
        raise DegenerateInputError("profile vanishes identically")
    return total


def scale_to_match(u_prof: StepProfile, z_prof: StepProfile, p: float) -> StepProfile:
    """``z_prof`` times the positive constant equalizing ``p``-th power integrals."""
    return z_prof.scaled(match_factor(u_prof, z_prof, p))


def match_factor(u_prof: StepProfile, z_prof: StepProfile, p: float) -> float:
    if not (p > 0 and math.isfinite(p)):
        raise DomainError("p must be positive and finite")
    ratio = _positive_integral(u_prof, p) / _positive_integral(z_prof, p)
    return ratio ** (1.0 / p)


# ---------------------------------------------------------------------------
# crossings and cumulative domination


@dataclass(frozen=True)
class CrossingResult:
    """Sign changes of ``z# - u#`` outside the dead-band.

    ``pattern`` lists the signs of the successive nonzero runs, e.g. ``"+-"``.
    """

    locations: tuple
    pattern: str
    band: float

    @property
    def count(self) -> int:
        return len(self.locations)

    @property
    def r1(self) -> float | None:
        return self.locations[0] if self.locations else None

    @property
    def violation(self) -> bool:
        return self.count > 1 or (self.count == 1 and self.pattern != "+-")


def crossing_analysis(u_sharp: StepProfile, z_sharp: StepProfile, tol_band: float) -> CrossingResult:
    """Sign changes of ``z# - u#`` ignoring pieces where ``|z# - u#| < tol_band``."""
    b, zl, ul = _common_pieces(z_sharp, u_sharp)
    diff = zl - ul
    sign = np.where(diff > tol_band, 1, np.where(diff < -tol_band, -1, 0))
    nz = np.nonzero(sign)[0]
    locations = []
    pattern = ""
    prev = None
    for i in nz:
        if prev is None or sign[i] != sign[prev]:
            pattern += "+" if sign[i] > 0 else "-"
            if prev is not None:
                # middle of the dead-band gap; a piece boundary if adjacent
                locations.append(float(0.5 * (b[prev + 1] + b[i])))
        prev = i
    return CrossingResult(tuple(locations), pattern, float(tol_band))


@dataclass(frozen=True)
class MarginResult:
    """``s -> int_0^s (z#)^p - (u#)^p`` at the merged breakpoints."""

    breakpoints: np.ndarray
    margin: np.ndarray

    @property
    def minimum(self) -> float:
        return float(np.min(self.margin))

    @property
    def at_end(self) -> float:
        return float(self.margin[-1])


def cumulative_domination(u_sharp: StepProfile, z_sharp: StepProfile, p: float) -> MarginResult:
    b, zl, ul = _common_pieces(z_sharp, u_sharp)
    inc = (zl ** p - ul ** p) * np.diff(b)
    return MarginResult(b, np.concatenate([[0.0], np.cumsum(inc)]))


# ---------------------------------------------------------------------------
# reverse Hoelder inequality


@dataclass(frozen=True)
class ChitiReport:
    """Slack of the reverse Hoelder inequality with the comparison data.

    ``slack[i]`` is ``||z||_q/||z||_p - ||u||_q/||u||_p`` at ``q = q_grid[i]``.
    ``cumulative_margin`` is the least cumulative margin divided by
    ``int (u#)^p``, so every field is invariant under scaling of ``u``.
    """

    p: float
    q_grid: tuple
    slack: tuple
    r1: float | None
    cumulative_margin: float
    equality_case: bool
    alpha: float
    v: float

    def slack_at(self, q: float) -> float:
        for qq, s in zip(self.q_grid, self.slack):
            if qq == q:
                return s
        raise KeyError(q)

    @property
    def min_slack(self) -> float:
        return min(self.slack)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q_grid": [encode_exponent(q) for q in self.q_grid],
            "slack": list(self.slack),
            "r1": self.r1,
            "cumulative_margin": self.cumulative_margin,
            "equality_case": self.equality_case,
            "alpha": self.alpha,
            "v": self.v,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChitiReport":
        return cls(
            p=float(data["p"]),
            q_grid=tuple(decode_exponent(q) for q in data["q_grid"]),
            slack=tuple(float(s) for s in data["slack"]),
            r1=None if data["r1"] is None else float(data["r1"]),
            cumulative_margin=float(data["cumulative_margin"]),
            equality_case=bool(data["equality_case"]),
            alpha=float(data["alpha"]),
            v=float(data["v"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ChitiReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Header ``q,slack``; ``q = inf`` is written as ``inf``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["q", "slack"])
        for q, s in zip(self.q_grid, self.slack):
            writer.writerow([encode_exponent(q), repr(s)])
        return buf.getvalue()


def _check_q_grid(p, q_grid):
    qs = tuple(decode_exponent(q) for q in q_grid)
    if not qs:
        raise DomainError("q_grid is empty")
    if any(not q >= p for q in qs):
        raise DomainError("every q must satisfy q >= p")
    return qs


def reverse_holder_check(u_prof: StepProfile, z_prof: StepProfile, p: float, q_grid,
                         alpha: float, tol: Tolerances = Tolerances()) -> ChitiReport:
    """Slack of ``||u||_q/||u||_p <= ||z||_q/||z||_p`` on ``q_grid``.

    ``z_prof`` lives on ``[0, alpha]`` and is zero on ``(alpha, v]``; it is
    scaled to match ``u_prof`` in ``L^p`` before the crossing and margin
    data are computed.  Only ratios enter the slack, so the scaling of
    either input is irrelevant.
    """
    qs = _check_q_grid(p, q_grid)
    zs = scale_to_match(u_prof, z_prof, p)
    up, zp = lp_norm(u_prof, p), lp_norm(zs, p)
    slack = tuple(lp_norm(zs, q) / zp - lp_norm(u_prof, q) / up for q in qs)
    v = u_prof.total
    crossing = crossing_analysis(u_prof, zs, tol.band * zs.sup)
    margin = cumulative_domination(u_prof, zs, p)
    strict = [s for q, s in zip(qs, slack) if q > p]
    if strict:
        equality = max(strict) < tol.eq
    else:
        equality = abs(v - alpha) <= tol.eq * v
    return ChitiReport(
        p=float(p),
        q_grid=qs,
        slack=slack,
        r1=crossing.r1,
        cumulative_margin=margin.minimum / u_prof.integral(p),
        equality_case=bool(equality),
        alpha=float(alpha),
        v=float(v),
    )


# ---------------------------------------------------------------------------
# pointwise domination, Hardy hypotheses, rigidity


@dataclass(frozen=True)
class DominationResult:
    holds: bool
    min_gap: float
    argmin: float
    factor: float


def domination_check(u_sharp: StepProfile, z_sharp: StepProfile, alpha: float,
                     mode: str = "match-at-zero", tol: float = 1e-8) -> DominationResult:
    """Check ``z# <= u#`` on ``(0, alpha]``.

    With ``mode="match-at-zero"`` ``z`` is first scaled so that
    ``z#(0) = u#(0)``; ``mode="as-is"`` uses ``z_sharp`` unchanged.
    ``tol`` is relative to ``u#(0)``.
    """
    if mode == "match-at-zero":
        if not z_sharp.sup > 0:
            raise DegenerateInputError("z vanishes identically")
        factor = u_sharp.sup / z_sharp.sup
    elif mode == "as-is":
        factor = 1.0
    else:
        raise DomainError(f"unknown mode {mode!r}")
    b, ul, zl = _common_pieces(u_sharp, z_sharp.scaled(factor))
    inside = b[:-1] < alpha
    gap = (ul - zl)[inside]
    k = int(np.argmin(gap))
    min_gap = float(gap[k])
    return DominationResult(
        holds=bool(min_gap >= -tol * u_sharp.sup),
        min_gap=min_gap,
        argmin=float(0.5 * (b[k] + b[k + 1])),
        factor=float(factor),
    )


@dataclass(frozen=True)
class HardyResult:
    """``failed`` is ``None``, ``"integral"`` or ``"tail"``."""

    passed: bool
    integral_gap: float
    worst_margin: float
    worst_y: float
    failed: str | None


def _tail_integrals(prof: StepProfile, y):
    """``int (prof - y)^+`` for every ``y``."""
    lv, w = prof.levels, prof.widths
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cl = np.concatenate([[0.0], np.cumsum(lv * w)])
    k = np.searchsorted(-lv, -np.asarray(y, dtype=float), side="left")
    return cl[k] - y * cw[k]


def hardy_hypothesis_check(f: StepProfile, g: StepProfile, y_grid=None, tol: float = 1e-10) -> HardyResult:
    """Check ``int g = int f`` and ``int (g - y)^+ <= int (f - y)^+`` for all ``y``.

    Both sides are piecewise linear in ``y`` with kinks at the levels, so
    testing at every level of ``f`` and ``g`` (plus ``y_grid``) is exact.
    ``tol`` is relative to ``int f``.
    """
    if abs(f.total - g.total) > 1e-12 * max(f.total, g.total):
        raise DomainError("profiles must live on a common interval")
    scale = max(abs(f.integral()), abs(g.integral()), 1e-300)
    ys = np.concatenate([f.levels, g.levels, [0.0]])
    if y_grid is not None:
        ys = np.concatenate([ys, np.asarray(y_grid, dtype=float)])
    ys = np.unique(ys)
    margin = _tail_integrals(f, ys) - _tail_integrals(g, ys)
    k = int(np.argmin(margin))
    integral_gap = f.integral() - g.integral()
    failed = None
    if abs(integral_gap) > tol * scale:
        failed = "integral"
    elif margin[k] < -tol * scale:
        failed = "tail"
    return HardyResult(failed is None, float(integral_gap), float(margin[k]), float(ys[k]), failed)


@dataclass(frozen=True)
class RigidityResult:
    """``status`` is ``"rigid"``, ``"non-rigid"`` or ``"inconsistent"``."""

    status: str
    q: float | None
    detail: str


def desk_rigidity_probe(report: ChitiReport, q: float | None = None, tol_eq: float = 1e-8,
                        tol_alpha: float = 1e-8) -> RigidityResult:
    """Consistency of a report with the equality case.

    If the slack vanishes at some ``q > p`` (the largest such ``q`` when
    ``q`` is omitted), it must vanish at every grid exponent in ``(p, q)``
    and ``alpha`` must equal ``v``.
    """
    p = report.p
    if q is None:
        zero = [qq for qq, s in zip(report.q_grid, report.slack) if qq > p and s < tol_eq]
        q = max(zero) if zero else None
    elif report.slack_at(decode_exponent(q)) >= tol_eq:
        q = None
    else:
        q = decode_exponent(q)
    alpha_eq = abs(report.v - report.alpha) <= tol_alpha * report.v
    if q is None:
        if alpha_eq and any(qq > p for qq in report.q_grid):
            return RigidityResult("inconsistent", None, "alpha = v but the slack is positive")
        return RigidityResult("non-rigid", None, "no exponent q > p with vanishing slack")
    bad = [qq for qq, s in zip(report.q_grid, report.slack) if p < qq < q and s >= tol_eq]
    if bad:
        return RigidityResult("inconsistent", q, f"slack positive at q = {bad[0]} < {q}")
    if not alpha_eq:
        return RigidityResult("inconsistent", q, f"alpha = {report.alpha} differs from v = {report.v}")
    return RigidityResult("rigid", q, "equal distribution functions; alpha = v")


# ---------------------------------------------------------------------------
# the differential inequality for u# and the identity for z#


@dataclass(frozen=True)
class DifferentialCheck:
    """Relative residuals ``(lhs - rhs) / rhs`` between neighbouring pieces.

    ``lhs`` is the difference quotient of ``-prof`` and ``rhs`` is
    ``lam / I(s)^2 * int_0^s prof``; ``h`` is the largest piece width.
    """

    s: np.ndarray
    residual: np.ndarray
    h: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))


def differential_check(prof: StepProfile, lam: float, params: ModelParams,
                       upto: float | None = None) -> DifferentialCheck:
    """Compare ``-d prof/ds`` with ``lam / I(s)^2 * int_0^s prof`` on ``(0, upto)``.

    Levels are read as samples at piece midpoints.  Quotients are taken in
    the radius ``r(s)``, where both eigenfunction profiles are smooth (in
    ``s`` they behave like ``s^(2/N)`` near 0), and converted with
    ``ds/dr = I(s)``.  The first piece, which carries the supremum, is
    skipped.
    """
    b, lv = prof.breakpoints, prof.levels
    upto = prof.total if upto is None else upto
    cum = prof.cumulative_integral()
    k = np.arange(2, len(lv))
    k = k[b[k] < upto]
    mid = 0.5 * (b[1:] + b[:-1])
    r0, r1 = quantile(params, mid[k - 1]), quantile(params, mid[k])
    rbar = 0.5 * (r0 + r1)
    sbar = cumulative(params, rbar)
    w = density(params, rbar)
    lhs = -(lv[k] - lv[k - 1]) / (r1 - r0) / w
    j = np.clip(np.searchsorted(b, sbar, side="right") - 1, 0, len(lv) - 1)
    partial = cum[j] + lv[j] * (sbar - b[j])
    rhs = lam / w ** 2 * partial
    return DifferentialCheck(sbar, (lhs - rhs) / rhs, float(np.max(prof.widths)))


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class ChitiRun:
    """Eigenpairs, matched mass and both rearrangements on a common mass grid.

    ``z_sharp`` is the model eigenfunction normalized to ``z(0) = 1`` and
    extended by zero on ``(alpha, v]``.
    """

    params: ModelParams
    domain: object
    u: EigenPair
    z: EigenPair
    alpha: AlphaSolution
    u_sharp: StepProfile
    z_sharp: StepProfile

    @property
    def v(self) -> float:
        return self.u_sharp.total

    @property
    def lam(self) -> float:
        return self.u.lam


def prepare(params: ModelParams, domain, cells: int = 4000, steps: int = DEFAULT_STEPS,
            alpha_tol: float = 1e-8) -> ChitiRun:
    """Solve on ``domain``, match the cap mass and rearrange both eigenfunctions."""
    u = first_eigen(params, domain, steps=steps)
    v = u.mass
    alpha = find_alpha(params, u.lam, v, tol=alpha_tol, steps=steps)
    if isinstance(domain, Cap) and abs(alpha.alpha - v) <= alpha_tol * v:
        # a cap is its own model: the first-zero search only misses v by rounding
        alpha = AlphaSolution(alpha=v, lam=alpha.lam, residual=0.0)
        z = u
    else:
        z = first_eigen_cap(params, alpha.alpha, steps=steps)
    b = mass_grid(params, alpha.alpha, v, cells)
    ru, rz = SmoothRearrangement.of(u), SmoothRearrangement.of(z)
    return ChitiRun(
        params=params,
        domain=domain,
        u=u,
        z=z,
        alpha=alpha,
        u_sharp=profile_from_function(ru, b, sup=ru.sup),
        z_sharp=profile_from_function(rz, b, sup=rz.sup),
    )


@dataclass(frozen=True)
class ChitiAnalysis:
    """Every comparison check of one run; ``violations`` names failed ones."""

    run: ChitiRun
    report: ChitiReport
    crossing: CrossingResult
    margin: MarginResult
    domination: DominationResult
    hardy: HardyResult
    rigidity: RigidityResult
    u_differential: DifferentialCheck
    z_differential: DifferentialCheck
    violations: tuple = field(default=())

    def checks(self) -> dict:
        return {
            "crossings": self.crossing.count,
            "crossing_pattern": self.crossing.pattern,
            "margin_at_v": self.margin.at_end,
            "domination_min_gap": self.domination.min_gap,
            "hardy_passed": self.hardy.passed,
            "rigidity": self.rigidity.status,
            "u_differential_max_residual": self.u_differential.max_residual,
            "z_differential_max_abs_residual": self.z_differential.max_abs_residual,
            "h": self.u_differential.h,
            "violations": list(self.violations),
        }


def analyze(run: ChitiRun, p: float = 1.0, q_grid=(1.0, 2.0, 4.0, 8.0, math.inf),
            tol: Tolerances = Tolerances(), diff_factor: float = 10.0) -> ChitiAnalysis:
    """Run every check on ``run``; nothing raises on a failed inequality."""
    report = reverse_holder_check(run.u_sharp, run.z_sharp, p, q_grid, run.alpha.alpha, tol)
    zs = scale_to_match(run.u_sharp, run.z_sharp, p)
    crossing = crossing_analysis(run.u_sharp, zs, tol.band * zs.sup)
    margin = cumulative_domination(run.u_sharp, zs, p)
    dom = domination_check(run.u_sharp, run.z_sharp, run.alpha.alpha, tol=tol.eq)
    hardy = hardy_hypothesis_check(zs.power(p), run.u_sharp.power(p))
    rigidity = desk_rigidity_probe(report, tol_eq=tol.eq, tol_alpha=tol.eq)
    ud = differential_check(run.u_sharp, run.lam, run.params)
    zd = differential_check(run.z_sharp, run.lam, run.params, upto=run.alpha.alpha)
    violations = []
    if report.min_slack < -tol.num:
        violations.append("reverse-holder")
    if crossing.violation:
        violations.append("crossing")
    if report.cumulative_margin < -tol.eq:
        violations.append("cumulative-domination")
    if not dom.holds:
        violations.append("domination")
    if not hardy.passed:
        violations.append("hardy")
    if rigidity.status == "inconsistent":
        violations.append("rigidity")
    if ud.max_residual > diff_factor * ud.h:
        violations.append("u-differential")
    if zd.max_abs_residual > diff_factor * zd.h:
        violations.append("z-differential")
    return ChitiAnalysis(run, report, crossing, margin, dom, hardy, rigidity, ud, zd, tuple(violations))

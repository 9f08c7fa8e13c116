import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chiti.eigensolver import Cap, first_eigen_cap, first_eigen_interval
from chiti.model_space import DomainError, ModelParams, cumulative, quantile
from chiti.rearrangement import (
    SmoothRearrangement,
    StepProfile,
    WeightedSamples,
    decreasing_rearrangement,
    distribution_function,
    lp_norm,
    mass_grid,
    profile_from_function,
    samples_from_eigenpair,
    schwartz_symmetrization,
)

EXPONENTS = [0.5, 1.0, 2.0, 7.0, math.inf]


@st.composite
def step_functions(draw, max_size=40):
    n = draw(st.integers(1, max_size))
    # a small value alphabet forces ties
    values = draw(arrays(np.float64, n, elements=st.sampled_from([0.0, 0.25, 1.0, 1.5, 2.0, 3.75, 10.0])
                         | st.floats(0.0, 50.0)))
    raw = draw(arrays(np.float64, n, elements=st.floats(0.01, 1.0)))
    total = draw(st.floats(0.05, 0.99))
    return WeightedSamples(values, raw / raw.sum() * total)


@st.composite
def strict_profiles(draw):
    n = draw(st.integers(1, 30))
    levels = np.sort(np.unique(draw(arrays(np.float64, n, elements=st.floats(0.0, 20.0)))))[::-1]
    cuts = np.sort(np.unique(draw(arrays(np.float64, len(levels) + 3, elements=st.floats(1e-3, 0.999)))))
    cuts = cuts[: len(levels)]
    if len(cuts) < len(levels):
        levels = levels[: len(cuts)]
    return StepProfile(np.concatenate([[0.0], cuts]), levels.copy())


def test_distribution_function_examples():
    u = WeightedSamples([3, 1, 2], [0.2, 0.3, 0.5])
    assert distribution_function(u, 1.5) == pytest.approx(0.7, abs=1e-15)
    assert distribution_function(u, 5) == 0.0
    assert distribution_function(u, 0) == pytest.approx(1.0, abs=1e-15)


def test_decreasing_rearrangement_example():
    prof = decreasing_rearrangement(WeightedSamples([3, 1, 2], [0.2, 0.3, 0.5]))
    np.testing.assert_array_equal(prof.levels, [3, 2, 1])
    np.testing.assert_allclose(prof.breakpoints, [0, 0.2, 0.7, 1.0], atol=1e-15)
    assert prof(0.0) == 3 and prof(0.2) == 3 and prof(0.21) == 2


def test_constant_is_single_piece():
    prof = decreasing_rearrangement(WeightedSamples([2.5] * 4, [0.1] * 4))
    assert len(prof.levels) == 1 and prof.levels[0] == 2.5
    assert prof.total == pytest.approx(0.4, abs=1e-15)


def test_lp_norm_examples():
    u = WeightedSamples([3, 2, 1], [0.2, 0.5, 0.3])
    assert lp_norm(u, 1) == pytest.approx(1.9, abs=1e-15)
    assert lp_norm(u, math.inf) == 3.0
    with pytest.raises(DomainError):
        lp_norm(u, 0)


@given(step_functions(), st.lists(st.floats(0.0, 55.0), min_size=20, max_size=20))
def test_equimeasurability_exact(u, levels):
    prof = decreasing_rearrangement(u)
    for t in levels + list(u.values):
        assert distribution_function(u, t) == distribution_function(prof, t)


@given(step_functions())
def test_lp_preservation(u):
    prof = decreasing_rearrangement(u)
    for p in EXPONENTS:
        a, b = lp_norm(u, p), lp_norm(prof, p)
        assert abs(a - b) <= 1e-12 * max(1.0, a)


@given(step_functions())
def test_rearrangement_shape(u):
    prof = decreasing_rearrangement(u)
    assert np.all(np.diff(prof.levels) < 0)
    assert prof.sup == np.max(np.abs(u.values))
    assert prof.total == u.total


@given(strict_profiles())
def test_idempotent_on_profiles(prof):
    again = decreasing_rearrangement(prof)
    np.testing.assert_array_equal(again.breakpoints, prof.breakpoints)
    np.testing.assert_array_equal(again.levels, prof.levels)


@given(step_functions())
def test_idempotent_after_rearranging(u):
    once = decreasing_rearrangement(u)
    twice = decreasing_rearrangement(once)
    np.testing.assert_array_equal(twice.breakpoints, once.breakpoints)
    np.testing.assert_array_equal(twice.levels, once.levels)


def test_ties_merge_to_canonical_form():
    prof = StepProfile([0.0, 0.25, 0.5, 0.75], [2.0, 2.0, 1.0])
    np.testing.assert_array_equal(decreasing_rearrangement(prof).levels, [2.0, 1.0])
    np.testing.assert_array_equal(prof.canonical().breakpoints, [0.0, 0.5, 0.75])


@pytest.mark.parametrize("phi", [np.sqrt, np.square, np.log1p, lambda x: 3.0 * x + 1.0])
@given(u=step_functions())
def test_monotone_map_equivariance(phi, u):
    left = decreasing_rearrangement(WeightedSamples(phi(u.values), u.masses))
    right = decreasing_rearrangement(u)
    grid = np.linspace(0.0, u.total, 97)
    np.testing.assert_array_equal(left(grid), phi(right(grid)))


def test_profile_evaluation_conventions():
    prof = StepProfile([0.0, 0.5, 1.0], [2.0, 1.0])
    assert prof(0.5) == 2.0
    assert prof(0.5000001) == 1.0
    assert prof(1.5) == 0.0
    with pytest.raises(DomainError):
        StepProfile([0.0, 0.5, 1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        StepProfile([0.1, 0.5], [1.0])


def test_profile_integrals():
    prof = StepProfile([0.0, 0.2, 0.7, 1.0], [3.0, 2.0, 1.0])
    assert prof.integral() == pytest.approx(1.9)
    assert prof.integral(2) == pytest.approx(9 * 0.2 + 4 * 0.5 + 0.3)
    assert prof.integral_between(0.1, 0.5) == pytest.approx(0.3 + 0.6)
    np.testing.assert_allclose(prof.cumulative_integral(), [0.0, 0.6, 1.6, 1.9])


@given(strict_profiles())
def test_profile_serialization_roundtrip(prof):
    for restored in (StepProfile.from_json(prof.to_json()), StepProfile.from_csv(prof.to_csv())):
        np.testing.assert_array_equal(restored.breakpoints, prof.breakpoints)
        np.testing.assert_array_equal(restored.levels, prof.levels)


def test_csv_header():
    assert StepProfile([0.0, 1.0], [1.0]).to_csv().splitlines()[0] == "s_break,level"


def test_schwartz_constant():
    x, vals = schwartz_symmetrization(WeightedSamples([1, 1], [0.25, 0.25]), ModelParams(1.0, 2.0))
    assert x[-1] == pytest.approx(math.pi / 2)
    np.testing.assert_array_equal(vals, 1.0)


def test_schwartz_fixes_radial_decreasing():
    params = ModelParams.canonical(2.0)
    pair = first_eigen_cap(params, 0.5)
    x, vals = schwartz_symmetrization(samples_from_eigenpair(pair), params, x=np.linspace(0.01, 1.5, 50))
    assert np.max(np.abs(vals - np.cos(x))) < 1e-3


def test_schwartz_of_interval_eigenfunction():
    params = ModelParams.canonical(2.0)
    pair = first_eigen_interval(params, math.pi / 4, 3 * math.pi / 4)
    samples = samples_from_eigenpair(pair)
    x, vals = schwartz_symmetrization(samples, params)
    assert np.all(np.diff(vals) <= 0)
    assert vals[0] == pytest.approx(np.max(pair.values), abs=1e-6)
    for t in (0.2, 0.5, 0.9):
        mass_star = float(cumulative(params, x[vals > t][-1])) if np.any(vals > t) else 0.0
        assert mass_star == pytest.approx(distribution_function(samples, t), abs=5e-3)


def test_sampled_cos_rearrangement_closed_form():
    params = ModelParams.canonical(2.0)
    prof = decreasing_rearrangement(samples_from_eigenpair(first_eigen_cap(params, 0.5)))
    s = np.linspace(0.01, 0.49, 30)
    assert np.max(np.abs(prof(s) - np.cos(quantile(params, s)))) < 1e-3


def test_smooth_rearrangement_interval_closed_form():
    # N = 2 on (pi/4, 3pi/4): u = u(pi/2 + arcsin s) in mass coordinates
    params = ModelParams.canonical(2.0)
    pair = first_eigen_interval(params, math.pi / 4, 3 * math.pi / 4)
    smooth = SmoothRearrangement.of(pair)
    s = np.linspace(0.0, smooth.mass, 41)
    r = math.pi / 2 + np.arcsin(s)
    expected = np.interp(r, pair.nodes, pair.values)
    assert smooth.mode == "pair"
    assert np.max(np.abs(smooth(s) - expected)) < 1e-6
    assert smooth.sup == pytest.approx(1.0, abs=1e-12)


def test_smooth_rearrangement_cap_is_identity():
    params = ModelParams.canonical(2.0)
    smooth = SmoothRearrangement.of(first_eigen_cap(params, 0.5))
    s = np.linspace(0.0, 0.5, 33)
    assert np.max(np.abs(smooth(s) - (1.0 - 2.0 * s))) < 1e-12


@given(st.floats(1.1, 8.0), st.floats(0.05, 0.9), st.floats(0.05, 1.0))
def test_mass_grid_properties(N, v, frac):
    params = ModelParams.canonical(N)
    alpha = v * frac
    b = mass_grid(params, alpha, v, cells=200)
    assert b[0] == 0.0 and b[-1] == v
    assert np.all(np.diff(b) > 0)
    if v - alpha > 1e-12 * v:
        assert alpha in b
    else:
        assert len(b) == 201


def test_mass_grid_errors():
    params = ModelParams.canonical(2.0)
    with pytest.raises(DomainError):
        mass_grid(params, 0.6, 0.5)
    with pytest.raises(DomainError):
        mass_grid(params, 0.2, 0.5, cells=8)


def test_profile_from_function_sup():
    prof = profile_from_function(lambda s: 1.0 - s, [0.0, 0.5, 1.0], sup=1.0)
    np.testing.assert_array_equal(prof.levels, [1.0, 0.25])

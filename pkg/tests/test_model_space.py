import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiti.model_space import (
    DomainError,
    ModelParams,
    cumulative,
    cumulative_simpson,
    density,
    isoperimetric_profile,
    quantile,
    radial_grid,
)

Ks = st.floats(0.1, 10.0)
Ns = st.floats(1.1, 12.0)


def test_params_derived_fields():
    p = ModelParams(2.0, 3.0)
    assert p.L == math.pi
    assert ModelParams.canonical(5).K == 4.0
    assert ModelParams(1.0, 2.0).c == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("K,N", [(0.0, 2.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 0.5), (math.nan, 2.0)])
def test_params_reject_bad_values(K, N):
    with pytest.raises(DomainError):
        ModelParams(K, N)


@given(Ks, st.floats(1.5, 12.0))
def test_normalization_by_quadrature(K, N):
    p = ModelParams(K, N)
    assert cumulative_simpson(p, p.L, tol=1e-11) == pytest.approx(1.0, abs=1e-9)
    assert cumulative(p, p.L) == pytest.approx(1.0, abs=1e-10)


def test_density_examples():
    p = ModelParams(1.0, 2.0)
    assert density(p, math.pi / 2) == pytest.approx(0.5, abs=1e-15)
    assert density(p, 0.0) == 0.0
    q = ModelParams(2.0, 3.0)
    assert density(q, q.L / 4) == pytest.approx(density(q, 3 * q.L / 4), abs=1e-14)


@given(Ks, Ns, st.floats(0.0, 1.0))
def test_density_symmetry(K, N, frac):
    p = ModelParams(K, N)
    t = frac * p.L
    assert abs(density(p, t) - density(p, p.L - t)) <= 1e-8 * density(p, t) + 1e-14


@pytest.mark.parametrize("t", [-0.1, 4.0, math.nan])
def test_density_domain(t):
    with pytest.raises(DomainError):
        density(ModelParams(1.0, 2.0), t)


def test_cumulative_examples():
    p = ModelParams(1.0, 2.0)
    assert cumulative(p, math.pi / 3) == pytest.approx(0.25, abs=1e-15)
    q = ModelParams(1.0, 3.0)
    assert cumulative(q, q.L / 2) == pytest.approx(0.5, abs=1e-15)
    x = math.pi / 5
    assert cumulative(q, x) + cumulative(q, q.L - x) == pytest.approx(1.0, abs=1e-15)


@given(Ks, Ns, st.floats(0.0, 1.0))
def test_cumulative_matches_simpson(K, N, frac):
    p = ModelParams(K, N)
    x = frac * p.L
    assert cumulative(p, x) == pytest.approx(cumulative_simpson(p, x), abs=1e-11)


def test_cumulative_is_increasing():
    p = ModelParams(1.5, 4.5)
    v = cumulative(p, np.linspace(0.0, p.L, 2001))
    assert np.all(np.diff(v) > 0)
    assert v[0] == 0.0 and v[-1] == 1.0


def test_quantile_examples(oracle):
    assert quantile(ModelParams(2.0, 3.0), 0.5) == pytest.approx(math.pi / 2, abs=1e-14)
    assert quantile(ModelParams(1.0, 2.0), 0.25) == pytest.approx(math.pi / 3, abs=1e-14)
    for row in oracle["quantile"]:
        p = ModelParams(row["K"], row["N"])
        assert quantile(p, row["v"]) == pytest.approx(row["r"], abs=1e-12)


@given(Ks, Ns, st.floats(1e-6, 1 - 1e-6))
def test_quantile_inverts_cumulative(K, N, v):
    p = ModelParams(K, N)
    assert abs(cumulative(p, quantile(p, v)) - v) < 1e-10


def test_quantile_vectorized_and_monotone():
    p = ModelParams(1.0, 2.5)
    v = np.random.default_rng(0).uniform(0.0, 1.0, 100)
    r = quantile(p, np.sort(v))
    assert np.all(np.diff(r) >= 0)
    assert np.max(np.abs(cumulative(p, r) - np.sort(v))) < 1e-10


@pytest.mark.parametrize("v", [0.0, 1.0, -0.5, 2.0])
def test_quantile_domain(v):
    with pytest.raises(DomainError):
        quantile(ModelParams(1.0, 2.0), v)


def test_isoperimetric_profile():
    p = ModelParams(1.0, 2.0)
    assert isoperimetric_profile(p, 0.5) == pytest.approx(0.5, abs=1e-14)
    assert isoperimetric_profile(p, 0.0) == 0.0
    assert isoperimetric_profile(p, 1.0) == 0.0
    assert isoperimetric_profile(p, 1e-12) < 1e-5
    q = ModelParams(2.0, 3.0)
    assert isoperimetric_profile(q, 0.3) == pytest.approx(isoperimetric_profile(q, 0.7), rel=1e-12)


@given(Ns, st.floats(0.01, 0.99), st.floats(0.2, 5.0))
def test_scaling_law(N, v, factor):
    canon = ModelParams.canonical(N)
    other = ModelParams(factor * (N - 1.0), N)
    s = other.scale
    assert quantile(other, v) * s == pytest.approx(quantile(canon, v), rel=1e-12)
    assert isoperimetric_profile(other, v) == pytest.approx(isoperimetric_profile(canon, v) * s, rel=1e-12)


def test_radial_grid():
    p = ModelParams(1.0, 2.0)
    g = radial_grid(p, np.linspace(0.0, p.L, 11))
    assert len(g) == 11
    assert g.weights[0] == 0.0 and g.weights[-1] == 0.0 and np.all(g.weights[1:-1] > 0)
    with pytest.raises(DomainError):
        radial_grid(p, [0.0, 1.0, 0.5])

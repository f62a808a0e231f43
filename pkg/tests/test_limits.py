import math

import numpy as np
import pytest

from occwalk import limits as L
from oracles import age_cdf_double_integral, entrance_density, lifetime_by_quadrature


def test_laplace_values():
    assert L.laplace2_tail(0.0) == 0.5
    assert L.laplace2_tail(1.0) == pytest.approx(0.5 * math.exp(-2), rel=1e-15)
    assert L.laplace2_cdf(-1.0) == pytest.approx(0.5 * math.exp(-2), rel=1e-15)


def test_reference_cdfs():
    assert L.levy_half_transform(0.5) == pytest.approx(math.exp(-1))
    assert L.sup_bm_cdf(0.0) == 0.0
    assert L.sup_bm_cdf(1.0) == pytest.approx(2 * L.Phi(1.0) - 1)
    assert L.eta_variance(0.5) == pytest.approx(0.6)
    assert L.eta_variance(0.0) == 1.0
    assert L.rayleigh_cdf(1.0) == pytest.approx(1 - math.exp(-0.5))
    assert L.Phi(0.0) == 0.5


@pytest.mark.parametrize("tag", ["laplace2", "std_normal", "eta_normal", "rayleigh", "sup_bm",
                                 "levy_half_transform", "excursion_lifetime"])
def test_laws_normalised(tag):
    assert L.limit_law(tag).normalization() == pytest.approx(1.0, abs=1e-8)


def test_lifetime_closed_forms():
    assert L.excursion_lifetime_tail(0.0, 2 / math.pi) == pytest.approx(1.0, abs=1e-10)
    for t in [0.01, 0.1, 1.0, 10.0, 100.0]:
        assert L.excursion_lifetime_tail(0.0, t) == pytest.approx(math.sqrt(2 / (math.pi * t)), abs=1e-10)
        for c in (-0.5, -1.0, -3.0):
            q = L.excursion_lifetime_tail(c, t)
            assert q == pytest.approx(float(L.lifetime_tail_closed(c, t)), abs=1e-10)
            assert q == pytest.approx(lifetime_by_quadrature(c, t), abs=1e-10)


def test_lifetime_monotone_decay():
    ts = np.geomspace(0.01, 200, 40)
    v = [L.excursion_lifetime_tail(-1.0, t) for t in ts]
    assert all(b < a for a, b in zip(v, v[1:]))
    assert v[-1] < 1e-40


def test_tolerance_halving_stable():
    for t in (0.05, 1.0, 30.0):
        a = L.excursion_lifetime_tail(-1.0, t, tol=1e-10)
        b = L.excursion_lifetime_tail(-1.0, t, tol=5e-11)
        assert abs(a - b) <= 1e-10


def test_scaling_relation_grid():
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = -rng.uniform(0.1, 5)
        t = rng.uniform(0.01, 20)
        assert L.scaling_residual(c, t, rng.uniform(0.1, 3)) <= 1e-9
    with pytest.raises(ValueError):
        L.scaling_residual(0.5, 1.0)


def test_entrance_density_matches_oracle():
    law = L.EntranceLaw(-1.5)
    for t, y in [(0.3, 0.2), (2.0, 1.0), (5.0, 4.0)]:
        assert float(law.density(t, y)) == pytest.approx(entrance_density(-1.5, t, y), rel=1e-14)
    with pytest.raises(ValueError):
        L.EntranceLaw(1.0)


def test_age_cdf_closed_form():
    for x in [0.05, 0.3, 1.0, 2.5]:
        assert float(L.age_cdf(x)) == pytest.approx(age_cdf_double_integral(x), abs=1e-9)
    assert float(L.age_cdf(0.0)) == 0.0
    assert float(L.age_cdf(60.0)) == pytest.approx(1.0, abs=1e-12)
    assert float(L.last_visit_cdf(0.4)) == float(L.age_cdf(0.8))
    assert float(L.last_visit_cdf(0.4, 1.0)) == float(L.age_cdf(0.4))


def test_taboo_density():
    assert float(L.taboo_density(-1.0, 1.0, 0.5, 1e-12)) < 1e-10
    assert float(L.taboo_density(-1.0, 1.0, 0.5, -1.0)) == 0.0
    with pytest.raises(ValueError):
        L.taboo_density(-1.0, 0.0, 1.0, 1.0)
    # killed density integrates to the survival probability, below one
    from scipy import integrate
    m = integrate.quad(lambda y: float(L.taboo_density(0.0, 1.0, 1.0, y)), 0, 30)[0]
    assert m == pytest.approx(2 * L.Phi(1.0) - 1, abs=1e-9)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0])
def test_marginal_identity(x):
    lhs, rhs = L.excursion_marginal_identity(x)
    assert abs(lhs - rhs) <= 1e-6


def test_marginal_identity_far_tail():
    lhs, rhs = L.excursion_marginal_identity(5.0)
    assert lhs == pytest.approx(math.exp(-10), rel=1e-4)
    assert rhs == math.exp(-10)


def test_errors():
    with pytest.raises(ValueError):
        L.excursion_lifetime_tail(-1.0, 0.0)
    with pytest.raises(ValueError):
        L.excursion_lifetime_tail(1.0, 1.0)
    with pytest.raises(ValueError):
        L.excursion_marginal_identity(-1.0)
    with pytest.raises(ValueError):
        L.limit_law("cauchy")

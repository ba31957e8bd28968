import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from quasibayes.errors import DomainError
from quasibayes.kernels import FlatKernel, GammaFixedShape, GaussianLocation, Poisson, parse_kernel


def test_density_examples():
    assert GaussianLocation(1.0).density(0.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-7)
    assert Poisson().density(0, 1.0) == pytest.approx(math.exp(-1), abs=1e-7)
    assert GaussianLocation(0.01).density(1.0, 1.0) == pytest.approx(stats.norm.pdf(0, scale=0.1), rel=1e-12)
    assert GaussianLocation(0.01).density(1.0, 1.0) == pytest.approx(3.9894228, abs=1e-7)


def test_gamma_density_matches_scipy():
    k = GammaFixedShape(2.5)
    x = np.array([0.1, 1.0, 4.0])
    assert np.allclose(k.density(x, 1.7), stats.gamma.pdf(x, 2.5, scale=1 / 1.7), rtol=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        Poisson().density(-1, 1.0)
    with pytest.raises(DomainError):
        Poisson().density(1.5, 1.0)
    with pytest.raises(DomainError):
        Poisson().density(1, -1.0)
    with pytest.raises(DomainError):
        GammaFixedShape(2.0).density(-1.0, 1.0)
    with pytest.raises(DomainError):
        GammaFixedShape(2.0).density(1.0, 0.0)
    with pytest.raises(DomainError):
        GaussianLocation(-1.0)
    with pytest.raises(DomainError):
        GaussianLocation(0.0)


def test_degenerate_gaussian_samples_exactly(rng):
    k = GaussianLocation(0.0, allow_degenerate=True)
    assert k.sample(2.0, rng) == 2.0
    assert not k.eligibility().square_ratio_condition


def test_sample_moments(rng):
    draws = Poisson().sample(4.0, rng, size=100_000)
    assert abs(draws.mean() - 4) < 3 * math.sqrt(4 / 1e5)
    draws = GaussianLocation(1.0).sample(0.0, rng, size=100_000)
    assert abs(draws.var() - 1) < 0.05


def test_eligibility_flags():
    for k in (GaussianLocation(0.3), GaussianLocation(10.0), Poisson(), GammaFixedShape(2.0)):
        assert k.eligibility().square_ratio_condition


@pytest.mark.parametrize("theta", [-3.0, 0.0, 2.5])
@pytest.mark.parametrize("s2", [0.01, 1.0, 4.0])
def test_gaussian_normalises(theta, s2):
    k = GaussianLocation(s2)
    sd = math.sqrt(s2)
    val, _ = integrate.quad(lambda x: k.density(x, theta), theta - 40 * sd, theta + 40 * sd, points=[theta])
    assert val == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("theta", [0.3, 1.0, 6.0])
def test_gamma_normalises(theta):
    k = GammaFixedShape(2.0)
    val, _ = integrate.quad(lambda x: k.density(x, theta), 0, np.inf)
    assert val == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("theta", [0.5, 4.0, 30.0])
def test_poisson_tail_summable(theta):
    k = Poisson()
    _, hi = k.support_window(theta, theta)
    xs = np.arange(0, hi + 1)
    assert 1 - k.density(xs, theta).sum() < 1e-10


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-50, 50), theta=st.floats(-50, 50), s2=st.floats(0.01, 10))
def test_log_density_consistent(x, theta, s2):
    k = GaussianLocation(s2)
    d = k.density(x, theta)
    if d > 1e-300:
        assert abs(k.log_density(x, theta) - math.log(d)) < 1e-12
    assert d >= 0


def _chi2_gof(draws, cdf_edges, probs):
    counts = np.histogram(draws, bins=cdf_edges)[0]
    expected = probs * len(draws)
    return stats.chisquare(counts, expected).pvalue


@pytest.mark.parametrize("theta", [-1.0, 0.0, 3.0])
def test_gaussian_sample_gof(theta, rng):
    k = GaussianLocation(2.0)
    draws = k.sample(theta, rng, size=10_000)
    q = k.ppf(np.linspace(0, 1, 21), theta)
    probs = np.full(20, 1 / 20)
    assert _chi2_gof(draws, q, probs) > 1e-3


@pytest.mark.parametrize("theta", [0.5, 2.0, 7.0])
def test_gamma_sample_gof(theta, rng):
    k = GammaFixedShape(3.0)
    draws = k.sample(theta, rng, size=10_000)
    q = k.ppf(np.linspace(0, 1, 21), theta)
    assert _chi2_gof(draws, q, np.full(20, 1 / 20)) > 1e-3


@pytest.mark.parametrize("theta", [0.7, 3.0, 12.0])
def test_poisson_sample_gof(theta, rng):
    k = Poisson()
    draws = k.sample(theta, rng, size=10_000)
    hi = int(stats.poisson.ppf(0.999, theta))
    support = np.arange(0, hi + 1)
    p = k.density(support, theta)
    p[-1] += 1 - p.sum()
    counts = np.bincount(np.minimum(draws.astype(int), hi), minlength=hi + 1)
    keep = p * len(draws) >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(p[keep], p[~keep].sum()) * len(draws)
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_flat_kernel_ignores_theta():
    k = FlatKernel()
    assert k.density(0.3, -5.0) == k.density(0.3, 5.0)


def test_parse_kernel():
    assert isinstance(parse_kernel("gaussian:sigma2=1.0"), GaussianLocation)
    assert parse_kernel("gaussian:sigma2=2").sigma2 == 2.0
    assert isinstance(parse_kernel("poisson"), Poisson)
    assert parse_kernel("gamma:shape=2.0").shape == 2.0
    with pytest.raises(ValueError):
        parse_kernel("cauchy")
    with pytest.raises(ValueError):
        parse_kernel("gaussian:sigma2")
    assert parse_kernel(parse_kernel("gamma:shape=2.5").spec).shape == 2.5

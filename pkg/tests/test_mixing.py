import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from quasibayes.errors import LayoutError, NumericalDomainError
from quasibayes.mixing import (
    AtomSet,
    DiscreteMixing,
    GridDensity,
    Indicator,
    Interval,
    gamma_grid,
    halfline,
    integrate,
    l1_distance,
    measure_of,
    normal_grid,
    parse_mixing,
    point_mass,
    read_csv,
    uniform_grid,
)


def std_normal_grid(m=1601):
    return GridDensity.from_pdf(stats.norm.pdf, -8, 8, m)


def test_full_window_mass():
    g = normal_grid(1, 3)
    assert g.measure_of(Interval(g.lower - 1, g.upper)) == pytest.approx(1, abs=1e-9)
    d = DiscreteMixing([0, 1, 2], [0.2, 0.3, 0.5])
    assert d.measure_of(Interval()) == pytest.approx(1, abs=1e-12)


def test_atom_lookup():
    d = DiscreteMixing([0, 1], [0.5, 0.5])
    assert d.measure_of(AtomSet([0])) == 0.5
    assert d.measure_of(Interval(-1, 0)) == 0.5
    assert d.measure_of(Interval(0, 1)) == 0.5  # (0, 1] excludes 0


def test_halfline_clipped_to_window():
    g = std_normal_grid()
    res = g.measure_of(halfline(0.0), full_output=True)
    assert res.mass == pytest.approx(0.5, abs=1e-6)
    assert res.clipped
    assert not g.measure_of(Interval(-1, 1), full_output=True).clipped


def test_cdf_interpolates_cumulative_trapezoid():
    g = uniform_grid(0, 1, m=11)
    assert g.cdf(0.25) == pytest.approx(0.25, abs=1e-12)
    assert g.measure_of(Interval(0.1, 0.35)) == pytest.approx(0.25, abs=1e-12)


def test_integrate_examples():
    g = normal_grid(1, 3)
    assert g.integrate(lambda t: np.ones_like(t)) == pytest.approx(1, abs=1e-9)
    fine = normal_grid(1, 3, m=2001)
    assert g.integrate(lambda t: t) == pytest.approx(1, abs=1e-4)
    assert abs(g.integrate(lambda t: t) - fine.integrate(lambda t: t)) < 1e-4


@pytest.mark.parametrize("region", [halfline(0.0), Interval(-1.3, 2.2), Interval(0.7, math.inf)])
def test_indicator_integral_equals_measure(region):
    for mix in (normal_grid(1, 3), DiscreteMixing([-1, 0.5, 3], [0.2, 0.5, 0.3])):
        assert integrate(mix, Indicator(region)) == measure_of(mix, region)


def test_integrate_rejects_non_finite():
    with pytest.raises(NumericalDomainError):
        normal_grid(0, 1).integrate(lambda t: np.where(t > 0, np.nan, 1.0))


def test_l1_examples():
    a = normal_grid(0, 1, lower=-10, upper=10, m=2001)
    assert l1_distance(a, a) == 0
    b = GridDensity.from_pdf(lambda t: stats.norm.pdf(t, 0.5), -10, 10, 2001)
    assert l1_distance(a, b) == pytest.approx(2 * (2 * stats.norm.cdf(0.25) - 1), abs=1e-3)
    assert l1_distance(DiscreteMixing([0, 1], [0.5, 0.5]), DiscreteMixing([2, 3], [0.5, 0.5])) == pytest.approx(2)


def test_l1_layout_mismatch():
    with pytest.raises(LayoutError):
        l1_distance(normal_grid(0, 1, m=101), normal_grid(0, 1, m=201))
    with pytest.raises(LayoutError):
        l1_distance(normal_grid(0, 1), DiscreteMixing([0], [1]))


def test_normalisation_idempotent():
    g = normal_grid(1, 3, m=301)
    raw = g.values * 1.37
    once = g.with_values(raw)
    twice = once.with_values(once.values)
    assert np.array_equal(once.values, twice.values)


def test_refinement_stability():
    for region in (halfline(0.0), Interval(-1, 2), halfline(3.0)):
        coarse = normal_grid(1, 3, m=1001).measure_of(region)
        fine = normal_grid(1, 3, m=2001).measure_of(region)
        assert abs(coarse - fine) < 1e-4


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-6, 6), w1=st.floats(0, 3), w2=st.floats(0, 3))
def test_measure_monotone(a, w1, w2):
    g = normal_grid(0.5, 2, m=401)
    inner = Interval(a, a + w1)
    outer = Interval(a - w2, a + w1 + w2)
    assert g.measure_of(inner) <= g.measure_of(outer) + 1e-12
    assert 0 <= g.measure_of(inner) <= 1


@settings(max_examples=30, deadline=None)
@given(values=st.lists(st.floats(0.01, 10), min_size=3, max_size=40))
def test_grid_invariants(values):
    g = GridDensity(-2, 3, values)
    assert np.all(g.values >= 0)
    assert abs(g.total_mass - 1) <= 1e-9


def test_discrete_validation():
    with pytest.raises(ValueError):
        DiscreteMixing([0, 0], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscreteMixing([0, 1], [-0.1, 1.1])
    d = DiscreteMixing([0, 1], [2, 6])
    assert np.allclose(d.weights, [0.25, 0.75])


def test_sampling_matches_cdf(rng):
    g = normal_grid(1, 3, m=1001)
    draws = g.sample(rng, size=20_000)
    assert stats.kstest(draws, stats.norm(1, math.sqrt(3)).cdf).pvalue > 1e-3
    d = DiscreteMixing([-1, 2], [0.3, 0.7])
    assert np.mean(d.sample(rng, size=20_000) == 2) == pytest.approx(0.7, abs=0.02)
    assert np.all(point_mass(4.0).sample(rng, size=5) == 4.0)


def test_quantile_inverts_cdf():
    g = normal_grid(0, 1, m=501)
    u = np.linspace(0.01, 0.99, 25)
    assert np.allclose(g.cdf(g.quantile(u)), u, atol=1e-12)


def test_csv_round_trip(tmp_path):
    g = normal_grid(1, 3, m=201)
    g.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().startswith("theta,density")
    back = read_csv(tmp_path / "g.csv")
    assert back.same_layout(g) and np.allclose(back.values, g.values, rtol=0, atol=1e-15)
    d = DiscreteMixing([0, 1.5], [0.25, 0.75])
    d.to_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().startswith("atom,weight")
    back = read_csv(tmp_path / "d.csv")
    assert np.array_equal(back.atoms, d.atoms) and np.allclose(back.weights, d.weights)


def test_parse_mixing(tmp_path):
    g = parse_mixing("normal:mean=1,var=3")
    assert isinstance(g, GridDensity) and g.size == 1001
    assert g.mean() == pytest.approx(1, abs=1e-4)
    assert g.lower == pytest.approx(1 - 6 * math.sqrt(3))
    d = parse_mixing("discrete:atoms=-5|5")
    assert np.allclose(d.weights, [0.5, 0.5])
    assert parse_mixing("point:at=2").atoms.tolist() == [2.0]
    assert parse_mixing("gamma:shape=2,rate=1").mean() == pytest.approx(2, abs=1e-3)
    normal_grid(0, 1, m=51).to_csv(tmp_path / "p.csv")
    assert parse_mixing(str(tmp_path / "p.csv")).size == 51
    with pytest.raises(ValueError):
        parse_mixing("cauchy:loc=0")


def test_interval_parse():
    iv = Interval.parse("(-inf,0]")
    assert iv.lower == -math.inf and iv.upper == 0
    assert Interval.parse(str(Interval(1, 2))) == Interval(1, 2)
    with pytest.raises(ValueError):
        Interval.parse("[0,1)")


def test_gamma_grid_positive_window():
    g = gamma_grid(2, 1)
    assert g.lower >= 0
    with pytest.raises(ValueError):
        gamma_grid(0.5, 1)
    assert gamma_grid(0.5, 1, lower=0.1).lower == 0.1

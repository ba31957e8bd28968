import json
import math

import numpy as np
import pytest
from scipy import stats

from quasibayes.experiments import (
    ConfigError,
    ExperimentConfig,
    count_modes,
    load_config_file,
    run_classifier_demo,
    run_experiment,
    run_fig1,
    run_fig2,
    run_fig3,
)

SMALL = dict(grid_m=201, seed=3)


def test_fig1_tables_and_beta_reference():
    res = run_fig1(ExperimentConfig("fig1", n=30, replicas=12, **SMALL))
    p0 = stats.norm.cdf(0, 1, math.sqrt(3))
    assert res.summary["beta_a"] == pytest.approx(5 * p0, rel=1e-12)
    assert res.summary["beta_a"] == pytest.approx(1.4096, abs=1e-3)
    assert res.summary["beta_b"] == pytest.approx(3.5904, abs=1e-3)
    samples = res.tables["gN0_samples"]
    assert len(samples) == 2 * 12
    assert set(samples.column("sigma2")) == {0.01, 1.0}
    assert len(res.tables["gn_density"]) == 2 * 12 * 201
    ref = res.tables["beta_reference"]
    assert np.allclose(ref.column("quantile"), stats.beta(5 * p0, 5 * (1 - p0)).ppf(ref.column("prob")))
    assert len(res.tables["fig1_summary"]) == 2


def test_proxy_n_sets_horizon():
    cfg = ExperimentConfig("fig1", proxy_n=7, replicas=2, **SMALL).resolved()
    assert cfg.n == 7


def test_fig2_structure():
    res = run_fig2(ExperimentConfig("fig2", n=40, snapshots="1,20,40", **SMALL))
    sens = res.tables["sensitivity"]
    assert list(sens.column("schedule")) == ["poly_alpha1", "poly_alpha100", "piecewise"]
    dens = res.tables["densities"]
    assert len(dens) == 3 * 3 * 3 * 201  # schedules x orderings x snapshots x grid
    finals = res.extra["finals"]
    assert sum(len(v) for v in finals.values()) == 9
    orderings = res.extra["orderings"]
    assert np.array_equal(np.sort(orderings[1]), np.sort(orderings[0]))
    assert np.allclose(sens.column("l1_truth_mean"),
                       np.mean([sens.column(f"l1_truth_ordering{o}") for o in range(3)], axis=0))


def test_fig3_contracts():
    res = run_fig3(ExperimentConfig("fig3", n=60, **SMALL))
    t = res.tables["bands"]
    g, lo, hi, half = (t.column(k) for k in ("G_n", "lo", "hi", "half_width"))
    assert np.all((lo >= 0) & (hi <= 1) & (lo <= g) & (g <= hi))
    unclipped = (g - half >= 0) & (g + half <= 1)
    assert np.all((lo + hi)[unclipped] / 2 == g[unclipped])
    assert np.array_equal(lo, np.maximum(g - half, 0.0)) and np.array_equal(hi, np.minimum(g + half, 1.0))
    assert len(set(t.column("schedule"))) == 2


def test_fig2_and_fig3_share_data():
    cfg = dict(n=25, **SMALL)
    d2 = run_fig2(ExperimentConfig("fig2", **cfg)).extra["orderings"][0]
    res3 = run_fig3(ExperimentConfig("fig3", **cfg))
    from quasibayes.experiments import _fig2_data, _grid_g0

    _, _, xs, _, _ = _fig2_data(res3.config, _grid_g0(res3.config.g0, res3.config.grid_m))
    assert np.array_equal(d2, xs)


def test_classifier_examples():
    res = run_classifier_demo(ExperimentConfig("classifier", n=200, seed=1))
    assert res.summary["terminal_accuracy"] > 0.99
    trace = res.tables["trace"]
    assert np.allclose(trace.column("p0") + trace.column("p1"), 1)
    single = run_classifier_demo(ExperimentConfig("classifier", n=50, g0="discrete:atoms=0",
                                                  true_mix="discrete:atoms=0"))
    assert single.summary["terminal_accuracy"] == 1.0
    assert single.summary["final_weights"] == [1.0]
    flat = run_classifier_demo(ExperimentConfig("classifier", n=300, kernel="flat",
                                                g0="discrete:atoms=-5|5,weights=0.7|0.3",
                                                true_mix="discrete:atoms=-5|5,weights=0.7|0.3"))
    assert flat.summary["terminal_accuracy"] == flat.summary["majority_rate"]


def test_validation_before_compute():
    for cfg in (ExperimentConfig("fig1", kernel="poisson"), ExperimentConfig("fig1", sigma2="0.01,-1"),
                ExperimentConfig("fig2", replicas=1), ExperimentConfig("fig9"),
                ExperimentConfig("classifier", g0="normal:mean=0,var=1"),
                ExperimentConfig("fig3", schedule="poly:alpha=1,beta=2"),
                ExperimentConfig("fig3", level=1.5), ExperimentConfig("custom", sets="[0,1)")):
        with pytest.raises(ConfigError):
            cfg.resolved()


def test_reruns_are_byte_identical_and_manifest_complete(tmp_path):
    cfg = dict(n=20, replicas=3, **SMALL)
    a = run_experiment(ExperimentConfig("fig1", out_dir=str(tmp_path / "a"), **cfg))
    run_experiment(ExperimentConfig("fig1", out_dir=str(tmp_path / "b"), **cfg))
    for name in a.tables:
        assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert {"config", "git_describe", "wall_clock_s", "seeds"} <= set(manifest)
    for key, value in a.config.__dict__.items():
        assert manifest["config"][key] == value
    c = run_experiment(ExperimentConfig("fig1", out_dir=str(tmp_path / "c"), **{**cfg, "seed": 4}))
    assert not np.array_equal(c.tables["gN0_samples"].column("G_N0"), a.tables["gN0_samples"].column("G_N0"))


def test_custom_experiment_summary():
    res = run_experiment(ExperimentConfig("custom", n=200, **SMALL), write=False)
    iv = res.tables["intervals"]
    assert np.all(iv.column("lo") <= iv.column("G_n"))
    assert len(res.summary["vhat"]) == 4


def test_count_modes():
    t = np.linspace(-5, 5, 501)
    assert count_modes(stats.norm.pdf(t)) == 1
    assert count_modes(stats.norm.pdf(t, -2, 0.5) + stats.norm.pdf(t, 2, 0.5)) == 2
    assert count_modes(np.ones_like(t)) == 0


def test_load_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nseed = 4\nproxy-n=500  # inline\n\n")
    assert load_config_file(p) == {"seed": "4", "proxy_n": "500"}
    p.write_text("seed 4\n")
    with pytest.raises(ConfigError):
        load_config_file(p)

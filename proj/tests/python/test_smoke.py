import math

import pytest

import cibench


def test_metrics_on_perfect_predictions():
    m = cibench.population_metrics(1000, [1.0, 2.0], [1.0, 2.0], [0.5, 1.5], [1.5, 2.5])
    assert m["enormse"] == 0.0
    assert m["bias"] == 0.0
    assert m["coverage"] == 1.0
    assert m["instances"] == 2


def test_aggregation_weights():
    per_size = [(1000, 1, 0.0), (50000, 1, 1.0)]
    assert cibench.aggregate_quadratic(per_size) == pytest.approx(math.sqrt(50 / 51), abs=1e-12)
    assert cibench.aggregate_linear(per_size) == pytest.approx(50 / 51, abs=1e-12)


def test_individual_enormse_zero():
    assert cibench.enormse_individual([([1.0, 2.0], [1.0, 2.0])]) == 0.0


def test_length_mismatch_raises():
    with pytest.raises(cibench.CibenchError):
        cibench.population_metrics(10, [1.0], [1.0, 2.0], [0.0], [2.0])


def test_ufid_shape():
    u = cibench.make_ufid(1, 2)
    assert len(u) == 7 and all(c in "0123456789abcdef" for c in u)


def test_generate_estimate_score(tmp_path):
    cfg = tmp_path / "dgp.ini"
    cfg.write_text("n_confounders = 2\nseed = 5\n")
    out = cibench.generate(cfg, tmp_path / "bench", synthetic=(50000, 8))
    assert "6 instance pairs" in out
    track = tmp_path / "bench" / "scaling"

    cibench.estimate(track, tmp_path / "p.csv", method="diff_means")
    report = cibench.score(tmp_path / "p.csv", track)
    assert [s["n"] for s in report["per_size"]] == list(cibench.SCALING_SIZES)
    assert report["aggregate"]["coverage"] is not None

    cibench.estimate(track, tmp_path / "ind", method="regression")
    ind = cibench.score(tmp_path / "ind", track, individual=True)
    assert ind["aggregate"]["coverage"] is None
    assert ind["aggregate"]["enormse"] >= 0.0

    some_obs = next(p for p in track.glob("*.csv") if len(p.stem) == 7)
    obs = cibench.read_observations(some_obs)
    labels = cibench.read_labels(track / f"{obs['ufid']}_cf.csv")
    assert sorted(obs["sample_id"]) == sorted(labels["sample_id"])


def test_command_errors_raise(tmp_path):
    with pytest.raises(cibench.CibenchError, match="no observation files found"):
        cibench.estimate(tmp_path, tmp_path / "p.csv")

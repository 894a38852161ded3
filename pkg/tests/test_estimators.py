import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pvtmodal import AutoMACPlacement, OutputOnlyModalIdentifier, PipelineConfig, WelchANPSD
from pvtmodal._validation import as_record, check_shapes
from pvtmodal.rig import DEFAULT_SENSOR_POSITIONS, ExcitationCase, simulate
from pvtmodal.stabilisation import StabConfig


def test_as_record_from_time_major_array():
    X = np.arange(12.0).reshape(6, 2)
    rec = as_record(X, 100.0)
    assert rec.n_channels == 2 and rec.n_samples == 6
    np.testing.assert_array_equal(rec.samples, X.T)
    assert list(rec.sensor_ids) == ["ch1", "ch2"]
    assert as_record(rec, 1.0) is rec
    with pytest.raises(ValueError):
        as_record(X, 100.0, sensor_positions=[0.1])
    with pytest.raises(ValueError):
        as_record(np.array([[np.nan, 1.0], [0.0, 1.0]]), 100.0)


def test_check_shapes():
    assert check_shapes(np.ones(4)).shape == (4, 1)
    with pytest.raises(ValueError):
        check_shapes(np.ones((0, 2)))


def test_params_round_trip_through_clone():
    est = OutputOnlyModalIdentifier(max_lag=5.0, orders=(20, 2, 30))
    params = est.get_params()
    assert params["max_lag"] == 5.0 and params["orders"] == (20, 2, 30)
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(taper="none")
    assert twin.pipeline_config().taper == "none"
    assert twin.pipeline_config().stab == StabConfig(20, 30, 2)


def test_welch_anpsd_transformer():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20000, 3))
    t = WelchANPSD(sample_rate=500.0, segment_length=1024)
    out = t.fit(X).transform(X)
    assert out.shape == t.frequencies_.shape
    np.testing.assert_allclose(t.fit_transform(X), out)
    with pytest.raises(ValueError):
        t.transform(X[:, :2])
    with pytest.raises(NotFittedError):
        WelchANPSD().transform(X)


def test_identifier_on_impulse_array(truth):
    rec = simulate(truth, ExcitationCase("impulse", hit_times=(1.0, 31.0)), duration=60.0, seed=2)
    X = rec.samples.T
    est = OutputOnlyModalIdentifier(sensor_positions=DEFAULT_SENSOR_POSITIONS, max_lag=10.0)
    est.fit(X)
    assert est.n_features_in_ == 7
    assert len(est.modes_) == 3
    np.testing.assert_allclose(est.frequencies_, truth.frequencies[:3], rtol=0.01)
    H = est.predict(np.linspace(1, 30, 50))
    assert H.shape == (50, 7)
    peak = np.linspace(1, 30, 50)[np.argmax(np.abs(H).sum(axis=1))]
    assert min(abs(peak - truth.frequencies[:3])) < 1.0


def test_identifier_requires_fit():
    with pytest.raises(NotFittedError):
        OutputOnlyModalIdentifier().predict([1.0])


def test_placement_estimator(truth):
    cand = np.round(np.arange(0.24, 0.801, 0.04), 2)
    Phi = truth.shapes_at(cand)[:, :3]
    est = AutoMACPlacement(n_sensors=7, required=(len(cand) - 1,)).fit(Phi, cand)
    np.testing.assert_allclose(est.positions_, DEFAULT_SENSOR_POSITIONS)
    assert est.transform(Phi).shape == (7, 3)
    assert est.search_ == "exhaustive"


def test_pipeline_config_round_trip_and_validation():
    cfg = PipelineConfig(max_lag=8.0, fit_band=(0.0, 35.0), stab=StabConfig(k_min=20, k_max=30))
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.make_taper().weights(np.array([8.0]))[0] == pytest.approx(0.01)
    assert PipelineConfig(taper="none").make_taper().kind == "none"
    assert PipelineConfig(taper="exponential", taper_decay=0.2).make_taper().pole_shift == 0.2
    with pytest.raises(ValueError, match="unknown"):
        PipelineConfig.from_dict({"max_lags": 3})
    with pytest.raises(ValueError):
        PipelineConfig(taper="hann")

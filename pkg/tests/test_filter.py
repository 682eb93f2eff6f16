import pytest

from blackstart.filter import FilterParams, FilterState, filter_derivative, resonance_frequency
from blackstart.frames import ThreePhase


def test_hardware_filter():
    fp = FilterParams.default()
    assert resonance_frequency(fp) == pytest.approx(1220.663, abs=1e-3)
    assert fp.z0 == pytest.approx(26.077, abs=1e-3)


def test_surge_estimate_from_characteristic_impedance(params):
    # a full-voltage step into the undamped filter rings at V / Z0
    assert params.v_hat / FilterParams.default().z0 / params.i_rated_peak == pytest.approx(1.228, abs=1e-3)


def test_derivative():
    fp = FilterParams(l_f=1e-3, c_f=1e-6, r_damp=0.5)
    fs = FilterState(ThreePhase(2.0, 0.0, -2.0), ThreePhase(10.0, 0.0, -10.0))
    di, dv = filter_derivative(fp, fs, ThreePhase(20.0, 0.0, -20.0), ThreePhase(1.0, 0.0, -1.0))
    assert di.a == pytest.approx((20 - 10 - 1.0) / 1e-3)
    assert dv.c == pytest.approx((-2.0 + 1.0) / 1e-6)


def test_validation():
    with pytest.raises(ValueError):
        FilterParams(0.0, 1e-6)
    with pytest.raises(ValueError):
        FilterParams(1e-3, 1e-6, -1.0)

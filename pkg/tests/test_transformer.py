import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blackstart.errors import UnphysicalResidual
from blackstart.frames import AlphaBeta, ThreePhase
from blackstart.transformer import (
    RESIDUAL_BOUND, CoreParams, TransformerState, magnetizing_current, set_residual_flux,
    state_derivative,
)

flux = st.floats(-5.0, 5.0, allow_nan=False)


def test_calibration(core, lam0):
    assert core.lambda_knee == pytest.approx(1.15 * lam0)
    assert core.l_sat == pytest.approx(4.3 / 120)
    assert core.r_wind == 0.3


def test_knee_current_below_rated(core, params):
    # magnetizing current at the knee is a small fraction of rated current
    assert magnetizing_current(core, core.lambda_knee) / params.i_rated_peak == pytest.approx(0.0227, abs=1e-4)


def test_validation():
    with pytest.raises(ValueError):
        CoreParams(1.0, 1.0, 2.0, 1e3, 0.1)
    with pytest.raises(ValueError):
        CoreParams(1.0, 4.0, 0.1, 1e3, -0.1)


@given(flux)
def test_curve_is_odd(core, lam):
    assert magnetizing_current(core, -lam) == -magnetizing_current(core, lam)


def test_curve_is_continuous_at_knee(core):
    k = core.lambda_knee
    inside = k / core.l_mag
    assert magnetizing_current(core, k) == inside
    above = magnetizing_current(core, np.nextafter(k, 10.0))
    assert above - inside < 1e-12


@given(flux, flux)
def test_curve_is_increasing(core, a, b):
    if a < b:
        assert magnetizing_current(core, a) < magnetizing_current(core, b)


def test_saturated_slope(core):
    k = core.lambda_knee
    di = magnetizing_current(core, k + 0.1) - magnetizing_current(core, k)
    assert di == pytest.approx(0.1 / core.l_sat)


def test_array_input(core):
    lam = np.array([-2.0, 0.0, 0.5, 2.0])
    i = magnetizing_current(core, lam)
    assert i.shape == (4,) and i[1] == 0.0 and i[0] == -i[3]


@given(flux, flux, st.floats(-500, 500), st.floats(-500, 500), st.floats(-500, 500))
def test_flux_derivative_sums_to_zero(core, la, lb, va, vb, vc):
    st_ = TransformerState(ThreePhase(la, lb, -la - lb))
    dlam, i_pcc = state_derivative(core, st_, ThreePhase(va, vb, vc))
    assert abs(sum(dlam)) < 1e-9
    assert i_pcc.a == pytest.approx(magnetizing_current(core, la) + va / core.r_core)


def test_residual_initial_condition(lam0):
    s = set_residual_flux(TransformerState(ThreePhase(0.0, 0.0, 0.0)), AlphaBeta(0.5 * lam0, 0.0), lam0)
    assert s.lam == pytest.approx((0.5 * lam0, -0.25 * lam0, -0.25 * lam0))
    with pytest.raises(UnphysicalResidual, match="unphysical residual flux"):
        set_residual_flux(s, AlphaBeta(0.0, (RESIDUAL_BOUND + 0.01) * lam0), lam0)


def test_lossless_keeps_curve(core):
    ll = core.lossless()
    assert (ll.lambda_knee, ll.l_mag, ll.l_sat, ll.r_wind) == (core.lambda_knee, core.l_mag, core.l_sat, 0.0)
    assert ll.r_core >= 1e9

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blackstart.errors import InsufficientSpan
from blackstart.frames import AlphaBeta
from blackstart.profiles import (
    PHI_RATED, Hard, Spiral, SystemParams, UltraFast, analytic_flux, cycle_offsets,
    flux_dc_offset, hard_voltage, make_profile, profile_voltage, spiral_voltage, ultrafast_voltage,
)


def test_rated_quantities(params):
    assert params.v_hat == pytest.approx(326.5986323710904, rel=1e-15)
    assert params.lambda0 == pytest.approx(0.86632978, abs=1e-8)
    assert abs(params.lambda0 / PHI_RATED - 1) < 2e-3
    assert params.t0 == pytest.approx(1 / 60)
    assert params.v_ll_rms == pytest.approx(400.0)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams.from_ratings(v_dc=400.0)
    with pytest.raises(ValueError):
        SystemParams(v_hat=-1.0, omega0=377.0)


def test_profile_timing(params):
    assert UltraFast.for_params(params).t_d == pytest.approx(2.6525823848649e-3, rel=1e-12)
    assert Spiral.for_params(params).t_a == pytest.approx(1 / 60)
    assert make_profile("hard", params) == Hard()
    with pytest.raises(ValueError):
        make_profile("soft", params)


def test_hard_voltage_starts_at_full_magnitude(params):
    v = hard_voltage(params, 0.0)
    assert (float(v.alpha), float(v.beta)) == (params.v_hat, 0.0)


def test_ultrafast_phase_jump(params):
    t_d = params.t0 / (2 * math.pi)
    before = ultrafast_voltage(params, t_d * (1 - 1e-9))
    after = ultrafast_voltage(params, t_d)
    assert float(before.alpha) == params.v_hat and float(before.beta) == 0.0
    assert float(after.alpha) == pytest.approx(0.0, abs=1e-12)
    assert float(after.beta) == pytest.approx(params.v_hat)


def test_spiral_magnitude_ramps_linearly_then_holds(params):
    t = np.linspace(0, params.t0, 11)
    mag = np.hypot(*spiral_voltage(params, t))
    assert np.allclose(mag, params.v_hat * t / params.t0, atol=1e-9)
    late = np.hypot(*spiral_voltage(params, np.linspace(params.t0, 3 * params.t0, 9)))
    assert np.allclose(late, params.v_hat)


def test_spiral_voltage_is_continuous_at_handover(params):
    a = spiral_voltage(params, params.t0 * (1 - 1e-12))
    b = spiral_voltage(params, params.t0 * (1 + 1e-12))
    assert np.allclose(a, b, atol=1e-6)


def test_analytic_flux_landmarks(params):
    lam0 = params.lambda0
    uf = analytic_flux(make_profile("ultrafast", params), params, params.t0 / (2 * math.pi))
    assert float(uf.alpha) == pytest.approx(lam0) and float(uf.beta) == pytest.approx(0.0, abs=1e-15)
    sp = analytic_flux(make_profile("spiral", params), params, params.t0)
    assert float(sp.alpha) == pytest.approx(0.0, abs=1e-12) and float(sp.beta) == pytest.approx(-lam0)
    hd = analytic_flux(Hard(), params, params.t0 / 2)
    assert float(hd.beta) == pytest.approx(2 * lam0)


@pytest.mark.parametrize("name", ["hard", "ultrafast", "spiral"])
@settings(max_examples=40, deadline=None)
@given(t=st.floats(1e-5, 0.05))
def test_analytic_flux_differentiates_to_voltage(params, name, t):
    prof = make_profile(name, params)
    t_d = params.t0 / (2 * math.pi)
    if name == "ultrafast" and abs(t - t_d) < 1e-5:
        return
    h = 1e-7
    lo, hi = analytic_flux(prof, params, t - h), analytic_flux(prof, params, t + h)
    v = profile_voltage(prof, params, t)
    assert (hi.alpha - lo.alpha) / (2 * h) == pytest.approx(float(v.alpha), abs=1e-3)
    assert (hi.beta - lo.beta) / (2 * h) == pytest.approx(float(v.beta), abs=1e-3)


def test_soft_profiles_reach_centred_circles(params):
    t = np.linspace(params.t0, 6 * params.t0, 5001)
    for name in ("ultrafast", "spiral"):
        lam = analytic_flux(make_profile(name, params), params, t)
        assert np.allclose(np.hypot(*lam), params.lambda0)
        off = flux_dc_offset(t, lam, params)
        assert math.hypot(*off) < 1e-6


def test_hard_offset_is_rated_flux_on_beta(params):
    t = np.linspace(0, 3 * params.t0, 30001)
    off = flux_dc_offset(t, analytic_flux(Hard(), params, t), params)
    assert off.alpha == pytest.approx(0.0, abs=1e-9)
    assert off.beta == pytest.approx(params.lambda0, rel=1e-9)


def test_offset_needs_a_full_cycle(params):
    t = np.linspace(0, 0.9 * params.t0, 100)
    with pytest.raises(InsufficientSpan, match="insufficient span"):
        flux_dc_offset(t, AlphaBeta(t, t), params)


def test_cycle_offsets_counts_whole_cycles(params):
    t = np.linspace(0, 3.5 * params.t0, 3501)
    starts, mags = cycle_offsets(t, analytic_flux(Hard(), params, t), params)
    assert starts.size == 3
    assert np.allclose(mags, params.lambda0, rtol=1e-6)

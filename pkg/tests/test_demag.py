import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blackstart.demag import (
    DemagParams, DemagPhase, DemagState, Prefluxing, build_residual_flux, demag_controller,
)
from blackstart.errors import DemagTimeout
from blackstart.frames import AlphaBeta, ThreePhase, abc_to_alphabeta
from blackstart.sim import default_scenario, run
from blackstart.transformer import magnetizing_current

DT = 1e-6
KW = dict(l_loop=0.04, v_clamp=350.0)


def _lossless(**kw):
    sc = default_scenario("spiral", False, demag_first=True, **kw)
    return replace(sc, core=sc.core.lossless())


def test_params_defaults_and_validation():
    dp = DemagParams()
    assert (dp.i_sat, dp.v_d, dp.ctrl_bandwidth, dp.timeout) == (3.0, 10.0, 500.0, 1.0)
    kp, ki = dp.gains(0.04)
    assert kp == pytest.approx(2 * math.pi * 500 * 0.04)
    assert ki == pytest.approx(kp * math.pi * 500)
    for bad in (dict(i_sat=0), dict(v_d=-1), dict(timeout=0)):
        with pytest.raises(ValueError):
            DemagParams(**bad)


def test_saturate_step_drives_towards_pattern():
    cmd, ds = demag_controller(DemagParams(), DemagState(), ThreePhase(0.0, 0.0, 0.0), DT, **KW)
    assert ds.phase is DemagPhase.SATURATE_POSITIVE
    assert cmd.a > 0 > cmd.c
    assert sum(cmd) == pytest.approx(0.0, abs=1e-12)


def test_transitions():
    dp = DemagParams(settle_time=0.0)
    latched = DemagState(latched_a=True, latched_c=True, started=True)
    cmd, ds = demag_controller(dp, latched, ThreePhase(3.0, 0.0, -3.0), DT, **KW)
    assert ds.phase is DemagPhase.REVERSE_SATURATE and cmd == (-10.0, 0.0, 10.0)
    for _ in range(9):
        cmd, ds = demag_controller(dp, ds, ThreePhase(0.0, 0.0, 0.0), DT, **KW)
    cmd, ds = demag_controller(dp, ds, ThreePhase(-3.0, 0.0, 3.0), DT, **KW)
    assert ds.phase is DemagPhase.RETURN_TO_ORIGIN and cmd == (10.0, 0.0, -10.0)
    assert ds.tau_measured == pytest.approx(10 * DT)
    for _ in range(5):
        cmd, ds = demag_controller(dp, ds, ThreePhase(0.0, 0.0, 0.0), DT, **KW)
    assert ds.phase is DemagPhase.DONE and cmd == (0.0, 0.0, 0.0)


def test_controller_timeout():
    dp = DemagParams(timeout=5 * DT)
    ds = DemagState(phase=DemagPhase.REVERSE_SATURATE)
    with pytest.raises(DemagTimeout, match="demag failed to converge"):
        for _ in range(10):
            _, ds = demag_controller(dp, ds, ThreePhase(0.0, 0.0, 0.0), DT, **KW)


def test_reverse_time_is_flux_swing_over_drive(core):
    r = run(_lossless(residual=AlphaBeta(0.3, 0.2)))
    lam_sat = core.lambda_knee + (3.0 - core.lambda_knee / core.l_mag) * core.l_sat
    # the (-v, 0, v) pattern moves the a-phase flux at v volts
    assert r.demag_state.tau_measured == pytest.approx(2 * lam_sat / 10.0, rel=1e-3)


def test_half_time_lands_on_zero_current_flux(lam0):
    r = run(_lossless(residual=AlphaBeta(-0.5, 0.4)))
    assert abs(r.demag_residual.a) < 0.02 * lam0


def test_current_falls_monotonically_while_reversing():
    r = run(_lossless(residual=AlphaBeta(0.2, -0.6)))
    s = r.series
    rev = (s.v_inv[:, 0] == -10.0) & (s.v_inv[:, 2] == 10.0)
    assert np.all(np.diff(s.i_inv[rev, 0]) <= 1e-12)


@pytest.mark.parametrize("with_filter", [False, True])
def test_zero_residual_still_terminates(with_filter, lam0):
    r = run(default_scenario("spiral", with_filter, demag_first=True))
    assert max(abs(x) for x in r.demag_residual) < 0.05 * lam0


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 2 * math.pi), st.booleans())
def test_any_residual_is_removed(frac, angle, with_filter):
    sc0 = default_scenario("spiral", with_filter)
    mag = frac * sc0.core.lambda_knee
    r = run(replace(sc0, residual=AlphaBeta(mag * math.cos(angle), mag * math.sin(angle)), demag_first=True))
    lam0 = sc0.params.lambda0
    assert max(abs(x) for x in r.demag_residual) < 0.05 * lam0
    assert r.metrics.flux_dc_offset_wb < 0.02 * lam0


def test_timeout_surfaces_from_run():
    with pytest.raises(DemagTimeout, match="demag failed to converge"):
        run(default_scenario("spiral", True, demag_first=True, demag=DemagParams(timeout=0.01)))


def test_prefluxing_to_the_knee(core, lam0):
    pre = build_residual_flux(ThreePhase(10.0, 0.0, -10.0), core.lambda_knee / 10.0)
    r = run(default_scenario("spiral", False, prefluxing=pre))
    got = abc_to_alphabeta(ThreePhase(*r.series.lam[0]))
    want = abc_to_alphabeta(ThreePhase(core.lambda_knee, 0.0, -core.lambda_knee))
    # resistive droop only ever takes flux away
    assert math.hypot(*got) <= math.hypot(*want)
    assert math.hypot(got.alpha - want.alpha, got.beta - want.beta) < 0.01 * lam0
    assert math.atan2(got.beta, got.alpha) == pytest.approx(math.pi / 6, abs=1e-3)


@pytest.mark.parametrize("pre", [build_residual_flux(ThreePhase(10.0, 0.0, -10.0), 0.0),
                                 build_residual_flux(ThreePhase(0.0, 0.0, 0.0), 0.05)])
def test_trivial_prefluxing_leaves_no_residual(pre):
    r = run(default_scenario("spiral", False, prefluxing=pre))
    assert np.all(r.series.lam[0] == 0.0)


def test_prefluxing_validation():
    with pytest.raises(ValueError):
        build_residual_flux(ThreePhase(1.0, 0.0, -1.0), -1.0)
    assert isinstance(build_residual_flux((1, 0, -1), 0.1), Prefluxing)

"""Fixed-step simulation of the inverter, LC filter and transformer.

A run has up to three stages on one continuous time axis:

* prefluxing: a DC pattern is applied to the idle core and removed. It only
  sets up residual flux and is not recorded;
* demagnetization (optional), recorded from ``t = 0``;
* energization with the selected profile, starting from local time zero.

Metrics describe the energization stage only.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from blackstart import _layout as L
from blackstart import kernels
from blackstart.demag import DemagParams, DemagState, Prefluxing, pack_params, state_from_ctl
from blackstart.errors import DemagTimeout, NumericalDivergence
from blackstart.filter import FilterParams, FilterState
from blackstart.frames import AlphaBeta, ThreePhase, abc_to_alphabeta, alphabeta_to_abc
from blackstart.profiles import (
    SystemParams, cycle_offsets, flux_dc_offset, make_profile, profile_voltage,
)
from blackstart.transformer import CoreParams, TransformerState, set_residual_flux

_SOURCE = {"off": L.SRC_OFF, "hard": L.SRC_HARD, "ultrafast": L.SRC_ULTRAFAST, "spiral": L.SRC_SPIRAL}

#: Flux offset below this fraction of the rated flux counts as eliminated.
OFFSET_TOLERANCE = 0.02

# demag is integrated in chunks so a long timeout never allocates a huge buffer
_DEMAG_CHUNK = 50_000


@dataclass(frozen=True)
class Scenario:
    """Everything one simulation run needs.

    ``t_end`` is the length of the energization stage; demagnetization, when
    enabled, runs before it and adds its own duration to the time axis.
    ``record_every`` decimates the stored series without affecting the
    integration or the peak-current metrics.
    """

    params: SystemParams
    core: CoreParams
    filter: Optional[FilterParams]
    profile: object
    residual: AlphaBeta = AlphaBeta(0.0, 0.0)
    demag_first: bool = False
    prefluxing: Optional[Prefluxing] = None
    demag: DemagParams = DemagParams()
    dt: float = 1e-6
    t_end: float = 0.1
    control_zoh: bool = False
    record_every: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.filter is not None and self.dt > 2e-6 * (1 + 1e-12):
            raise ValueError("dt must not exceed 2e-6 s with the LC filter present")
        if self.t_end < 5.0 * self.params.t0 * (1 - 1e-12):
            raise ValueError("t_end must cover at least five fundamental periods")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        if self.control_zoh and self.zoh_steps < 1:
            raise ValueError("dt is longer than the control period")

    @property
    def zoh_steps(self):
        return int(round(1.0 / (self.params.f_sw * self.dt)))


def default_scenario(profile="spiral", with_filter=True, **overrides) -> Scenario:
    """Scenario with the default ratings; ``profile`` may be a name."""
    p = overrides.pop("params", None) or SystemParams.from_ratings()
    if isinstance(profile, str):
        profile = make_profile(profile, p)
    core = overrides.pop("core", None) or CoreParams.calibrated(p.lambda0)
    filt = FilterParams.default() if with_filter else None
    return Scenario(params=p, core=core, filter=filt, profile=profile, **overrides)


@dataclass(frozen=True)
class PlantState:
    """Joint state; ``filter`` is ``None`` for a plant without the LC filter."""

    transformer: TransformerState
    filter: Optional[FilterState] = None

    def to_vector(self):
        x = np.zeros(L.N_STATE)
        x[L.X_LAM:L.X_LAM + 3] = self.transformer.lam
        if self.filter is not None:
            x[L.X_IINV:L.X_IINV + 3] = self.filter.i_inv
            x[L.X_VC:L.X_VC + 3] = self.filter.v_c
        return x

    @classmethod
    def from_vector(cls, x, with_filter):
        lam = TransformerState(ThreePhase(*map(float, x[L.X_LAM:L.X_LAM + 3])))
        if not with_filter:
            return cls(lam)
        fs = FilterState(ThreePhase(*map(float, x[L.X_IINV:L.X_IINV + 3])),
                         ThreePhase(*map(float, x[L.X_VC:L.X_VC + 3])))
        return cls(lam, fs)


def kernel_params(sc: Scenario, dc_pattern=(0.0, 0.0, 0.0)):
    """Flat parameter vector consumed by the integration kernels."""
    p, core = sc.params, sc.core
    par = np.zeros(L.N_PAR)
    par[L.P_VHAT] = p.v_hat
    par[L.P_OMEGA] = p.omega0
    par[L.P_TD] = getattr(sc.profile, "t_d", p.t0 / (2.0 * math.pi))
    par[L.P_TA] = getattr(sc.profile, "t_a", p.t0)
    par[L.P_DC_A:L.P_DC_C + 1] = dc_pattern
    par[L.P_KNEE] = core.lambda_knee
    par[L.P_LMAG] = core.l_mag
    par[L.P_LSAT] = core.l_sat
    par[L.P_RCORE] = core.r_core
    par[L.P_RWIND] = core.r_wind
    if sc.filter is not None:
        par[L.P_LF] = sc.filter.l_f
        par[L.P_CF] = sc.filter.c_f
        par[L.P_RDAMP] = sc.filter.r_damp
    l_loop = (sc.filter.l_f if sc.filter is not None else 0.0) + core.l_sat
    pack_params(sc.demag, l_loop, 0.5 * p.v_dc, par)
    return par


def step(sc: Scenario, state: PlantState, t, dt=None) -> PlantState:
    """Advance the plant by one RK4 step with the scenario's profile.

    ``t`` is the profile-local time at the start of the step. With
    ``control_zoh`` the inverter command is the value latched at the last
    control tick.
    """
    dt = sc.dt if dt is None else dt
    has_filter = sc.filter is not None
    source = _SOURCE[sc.profile.tag]
    if sc.control_zoh:
        t_tick = math.floor(t * sc.params.f_sw + 1e-9) / sc.params.f_sw
        held = alphabeta_to_abc(profile_voltage(sc.profile, sc.params, t_tick))
        par = kernel_params(sc, tuple(float(v) for v in held))
        source = L.SRC_DC
    else:
        par = kernel_params(sc)
    x = state.to_vector()
    out = np.zeros((2, L.N_COL))
    status, _, _ = kernels.integrate(x, par, source, has_filter, t, t, dt, 1, 0, out, 1,
                                     np.zeros(L.N_PEAK), np.zeros(L.N_CTL))
    if status == L.ST_DIVERGED:
        raise NumericalDivergence(t + dt)
    return PlantState.from_vector(x, has_filter)


@dataclass(frozen=True)
class Series:
    """Recorded waveforms; per-phase arrays have shape ``(n, 3)``."""

    t: np.ndarray
    v_inv: np.ndarray
    v_pcc: np.ndarray
    i_inv: np.ndarray
    i_pcc: np.ndarray
    lam: np.ndarray

    @classmethod
    def from_rows(cls, rows):
        rows = np.asarray(rows, dtype=float)
        return cls(
            t=rows[:, L.COL_T].copy(),
            v_inv=rows[:, L.COL_VINV:L.COL_VINV + 3].copy(),
            v_pcc=rows[:, L.COL_VPCC:L.COL_VPCC + 3].copy(),
            i_inv=rows[:, L.COL_IINV:L.COL_IINV + 3].copy(),
            i_pcc=rows[:, L.COL_IPCC:L.COL_IPCC + 3].copy(),
            lam=rows[:, L.COL_LAM:L.COL_LAM + 3].copy(),
        )

    def __len__(self):
        return self.t.size

    @property
    def lam_alphabeta(self) -> AlphaBeta:
        return abc_to_alphabeta(ThreePhase(*self.lam.T))

    @property
    def v_inv_alphabeta(self) -> AlphaBeta:
        return abc_to_alphabeta(ThreePhase(*self.v_inv.T))

    @property
    def v_pcc_alphabeta(self) -> AlphaBeta:
        return abc_to_alphabeta(ThreePhase(*self.v_pcc.T))

    def since(self, t0):
        """Samples from ``t0`` on."""
        k = int(np.searchsorted(self.t, t0 - 1e-12))
        return Series(*(getattr(self, f)[k:] for f in ("t", "v_inv", "v_pcc", "i_inv", "i_pcc", "lam")))


@dataclass(frozen=True)
class Metrics:
    peak_i_pcc_pu: float
    peak_i_inv_pu: float
    flux_dc_offset_wb: float
    startup_time_s: Optional[float]
    method: str
    offset_settle_time_s: Optional[float] = None
    demag_duration_s: Optional[float] = None

    @property
    def startup_reached(self):
        return self.startup_time_s is not None

    def to_dict(self):
        return {
            "peak_i_pcc_pu": self.peak_i_pcc_pu,
            "peak_i_inv_pu": self.peak_i_inv_pu,
            "flux_dc_offset_wb": self.flux_dc_offset_wb,
            "startup_time_s": self.startup_time_s if self.startup_reached else "not reached",
            "method": self.method,
            "offset_settle_time_s": self.offset_settle_time_s,
            "demag_duration_s": self.demag_duration_s,
        }


@dataclass(frozen=True)
class SimResult:
    series: Series
    metrics: Metrics
    energize_from: float = 0.0
    #: core flux when demagnetization finished
    demag_residual: Optional[ThreePhase] = field(default=None, compare=False)
    demag_state: Optional[DemagState] = field(default=None, compare=False)


def _wrap(x):
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def detect_startup(t, v: AlphaBeta, p: SystemParams, rel_tol=1e-6, max_jump=0.1):
    """Instant from which the voltage is at rated magnitude and steady rotation.

    The first sample whose following ``T0/2`` window keeps ``|v|`` within
    ``rel_tol`` of ``V`` while the phase rotates at the rated rate, i.e. the
    demodulated angle ``angle(v) - w0 t`` neither jumps by more than
    ``max_jump`` between samples nor drifts by more than ``max_jump`` over
    ``T0/8``. Returns ``None`` when no such instant exists.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    if n < 2:
        return None
    h = (t[-1] - t[0]) / (n - 1)
    width = int(math.ceil(0.5 * p.t0 / h - 1e-9))
    lag = max(1, int(round(p.t0 / 8.0 / h)))
    if width >= n:
        return None
    alpha = np.asarray(v.alpha, dtype=float)
    beta = np.asarray(v.beta, dtype=float)
    bad = np.abs(np.hypot(alpha, beta) - p.v_hat) > rel_tol * p.v_hat
    demod = np.arctan2(beta, alpha) - p.omega0 * t
    jump_bad = np.abs(_wrap(np.diff(demod))) > max_jump
    lag_bad = np.abs(_wrap(demod[lag:] - demod[:-lag])) > max_jump

    def window_count(flags, span):
        # flags[i] concerns samples i..i+span; count those inside [s, s+width]
        c = np.concatenate(([0], np.cumsum(flags, dtype=np.int64)))
        s = np.arange(n - width)
        hi = np.minimum(s + width - span + 1, flags.size)
        return c[np.maximum(hi, s)] - c[s]

    total = window_count(bad, 0) + window_count(jump_bad, 1)
    if lag <= width:
        total = total + window_count(lag_bad, lag)
    ok = np.flatnonzero(total == 0)
    return float(t[ok[0]] - t[0]) if ok.size else None


def offset_settle_time(t, lam: AlphaBeta, p: SystemParams, tolerance=OFFSET_TOLERANCE):
    """End of the first cycle after which every cycle's flux offset stays small.

    Measured from ``t[0]``; ``None`` if the last whole cycle still exceeds
    ``tolerance * lambda0``.
    """
    starts, mags = cycle_offsets(t, lam, p)
    if mags.size == 0 or mags[-1] >= tolerance * p.lambda0:
        return None
    above = np.flatnonzero(mags >= tolerance * p.lambda0)
    k = 0 if above.size == 0 else above[-1] + 1
    return float(starts[k] - t[0])


def compute_metrics(series: Series, p: SystemParams, method="unknown", energize_from=None,
                    peaks=None, demag_duration=None) -> Metrics:
    """Metrics of the energization stage of ``series``.

    ``energize_from`` defaults to the first sample. ``peaks`` may carry
    per-phase absolute maxima ``(|i_inv| a..c, |i_pcc| a..c)`` tracked at every
    integration step; otherwise they are taken from the samples.
    """
    t0 = series.t[0] if energize_from is None else energize_from
    s = series.since(t0)
    if peaks is None:
        peak_inv = float(np.max(np.abs(s.i_inv))) if len(s) else 0.0
        peak_pcc = float(np.max(np.abs(s.i_pcc))) if len(s) else 0.0
    else:
        peak_inv = float(np.max(peaks[:3]))
        peak_pcc = float(np.max(peaks[3:]))
    lam_ab = s.lam_alphabeta
    offset = flux_dc_offset(s.t, lam_ab, p)
    return Metrics(
        peak_i_pcc_pu=peak_pcc / p.i_rated_peak,
        peak_i_inv_pu=peak_inv / p.i_rated_peak,
        flux_dc_offset_wb=float(math.hypot(*offset)),
        startup_time_s=detect_startup(s.t, s.v_inv_alphabeta, p),
        method=method,
        offset_settle_time_s=offset_settle_time(s.t, lam_ab, p),
        demag_duration_s=demag_duration,
    )


def _check(status, t_abs0, steps, dt):
    if status == L.ST_DIVERGED:
        raise NumericalDivergence(t_abs0 + steps * dt)


def _preflux(sc, x, par_base, has_filter):
    pf = sc.prefluxing
    n = int(round(pf.duration / sc.dt))
    if n == 0:
        return
    par = par_base.copy()
    par[L.P_DC_A:L.P_DC_C + 1] = pf.pattern_v
    out = np.zeros((2, L.N_COL))
    status, k, _ = kernels.integrate(x, par, L.SRC_DC, has_filter, -pf.duration, 0.0, sc.dt, n, 0,
                                     out, n, np.zeros(L.N_PEAK), np.zeros(L.N_CTL))
    _check(status, -pf.duration, k, sc.dt)
    # the core keeps its flux once the pattern is removed; circuit currents die out
    x[:L.X_LAM] = 0.0


def _demagnetize(sc, x, par, has_filter):
    dt, every = sc.dt, sc.record_every
    ctl = np.zeros(L.N_CTL)
    chunks = []
    k_total = 0
    while True:
        out = np.zeros((_DEMAG_CHUNK // every + 2, L.N_COL))
        t0 = k_total * dt
        status, k, rows = kernels.integrate(x, par, L.SRC_DEMAG, has_filter, t0, t0, dt,
                                            _DEMAG_CHUNK, 0, out, every, np.zeros(L.N_PEAK), ctl)
        _check(status, t0, k, dt)
        k_total += k
        if status == L.ST_TIMEOUT:
            phase = ("SATURATE_POSITIVE", "REVERSE_SATURATE", "RETURN_TO_ORIGIN", "DONE")[int(ctl[L.C_PHASE])]
            raise DemagTimeout(phase, k_total * dt)
        # the closing row repeats at the start of whatever follows
        chunks.append(out[:rows - 1])
        if status == L.ST_DEMAG_DONE:
            return np.concatenate(chunks), k_total * dt, state_from_ctl(ctl, dt)


def run(sc: Scenario) -> SimResult:
    """Simulate ``sc`` and compute the energization metrics."""
    has_filter = sc.filter is not None
    p = sc.params
    state = set_residual_flux(TransformerState(ThreePhase(0.0, 0.0, 0.0)), sc.residual, p.lambda0)
    x = PlantState(state).to_vector()
    par = kernel_params(sc)
    if sc.prefluxing is not None:
        _preflux(sc, x, par, has_filter)

    pieces = []
    t_start = 0.0
    demag_duration = None
    residual_after = None
    demag_state = None
    if sc.demag_first:
        rows, t_start, demag_state = _demagnetize(sc, x, par, has_filter)
        pieces.append(rows)
        demag_duration = t_start
        residual_after = ThreePhase(*map(float, x[L.X_LAM:L.X_LAM + 3]))

    n = int(round(sc.t_end / sc.dt))
    every = sc.record_every
    out = np.zeros((n // every + 2, L.N_COL))
    peaks = np.zeros(L.N_PEAK)
    zoh = sc.zoh_steps if sc.control_zoh else 0
    status, k, rows = kernels.integrate(x, par, _SOURCE[sc.profile.tag], has_filter, t_start, 0.0,
                                        sc.dt, n, zoh, out, every, peaks, np.zeros(L.N_CTL))
    _check(status, t_start, k, sc.dt)
    pieces.append(out[:rows])

    series = Series.from_rows(np.concatenate(pieces))
    metrics = compute_metrics(series, p, sc.profile.tag, energize_from=t_start, peaks=peaks,
                              demag_duration=demag_duration)
    return SimResult(series, metrics, t_start, residual_after, demag_state)


def with_profile(sc: Scenario, name) -> Scenario:
    return replace(sc, profile=make_profile(name, sc.params))

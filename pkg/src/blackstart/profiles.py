"""Inverter EMF reference profiles for transformer magnetization.

Each profile is a voltage trajectory in the stationary frame. Alongside the
voltage, :func:`analytic_flux` returns its exact time integral, i.e. the flux
a lossless transformer would follow, which the simulator is checked against.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from blackstart.errors import InsufficientSpan
from blackstart.frames import AlphaBeta

#: Nameplate rated flux of the reference transformer (Wb).
PHI_RATED = 0.8656


@dataclass(frozen=True)
class SystemParams:
    """Rated quantities of the converter and its operating point.

    Parameters
    ----------
    v_hat : float
        Rated phase-voltage peak (V).
    omega0 : float
        Rated angular frequency (rad/s).
    s_rated : float
        Rated power (VA).
    v_dc : float
        DC-link voltage (V).
    i_rated_peak : float
        Rated peak current (A); the per-unit current base.
    f_sw : float
        Control-update frequency (Hz).
    """

    v_hat: float
    omega0: float
    s_rated: float = 5e3
    v_dc: float = 700.0
    i_rated_peak: float = 10.2
    f_sw: float = 8e3

    def __post_init__(self):
        for name in ("v_hat", "omega0", "s_rated", "v_dc", "i_rated_peak", "f_sw"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if math.sqrt(3.0) * self.v_hat > self.v_dc:
            raise ValueError("line-line voltage peak exceeds the DC-link voltage")

    @classmethod
    def from_ratings(cls, v_ll_rms=400.0, f0=60.0, s_rated=5e3, v_dc=700.0,
                     i_rated_peak=10.2, f_sw=8e3):
        """Build from nameplate line-line RMS voltage and frequency."""
        v_hat = v_ll_rms * math.sqrt(2.0) / math.sqrt(3.0)
        return cls(v_hat, 2.0 * math.pi * f0, s_rated, v_dc, i_rated_peak, f_sw)

    @property
    def f0(self):
        return self.omega0 / (2.0 * math.pi)

    @property
    def t0(self):
        return 2.0 * math.pi / self.omega0

    @property
    def lambda0(self):
        return self.v_hat / self.omega0

    @property
    def v_ll_rms(self):
        return self.v_hat * math.sqrt(3.0) / math.sqrt(2.0)


# Magnetization profiles. ``tag`` names the profile in files and tables.

@dataclass(frozen=True)
class Hard:
    tag: str = field(default="hard", init=False)


@dataclass(frozen=True)
class UltraFast:
    t_d: float
    tag: str = field(default="ultrafast", init=False)

    @classmethod
    def for_params(cls, p: SystemParams):
        return cls(t_d=p.t0 / (2.0 * math.pi))


@dataclass(frozen=True)
class Spiral:
    a: float
    t_a: float
    b: float = 1.0
    tag: str = field(default="spiral", init=False)

    @classmethod
    def for_params(cls, p: SystemParams):
        return cls(a=p.v_hat / (2.0 * math.pi), t_a=p.t0)


@dataclass(frozen=True)
class Off:
    tag: str = field(default="off", init=False)


PROFILE_NAMES = ("hard", "ultrafast", "spiral")


def make_profile(name, p: SystemParams):
    """Profile instance for ``name`` with its timing fixed by ``p``."""
    if name == "hard":
        return Hard()
    if name == "ultrafast":
        return UltraFast.for_params(p)
    if name == "spiral":
        return Spiral.for_params(p)
    if name == "off":
        return Off()
    raise ValueError(f"unknown profile {name!r}")


def hard_voltage(p: SystemParams, t) -> AlphaBeta:
    """Rated voltage applied at once: ``V (cos w t, sin w t)``."""
    wt = p.omega0 * np.asarray(t, dtype=float)
    return AlphaBeta(p.v_hat * np.cos(wt), p.v_hat * np.sin(wt))


def ultrafast_voltage(p: SystemParams, t) -> AlphaBeta:
    """Full-magnitude vector held on the alpha axis for ``T0/2pi``, then rotated.

    The phase jumps to pi/2 at the end of the hold so the voltage is tangent to
    a flux circle centred on the origin.
    """
    t = np.asarray(t, dtype=float)
    t_d = p.t0 / (2.0 * math.pi)
    theta = np.where(t < t_d, 0.0, 0.5 * math.pi + p.omega0 * (t - t_d))
    return AlphaBeta(p.v_hat * np.cos(theta), p.v_hat * np.sin(theta))


def spiral_voltage(p: SystemParams, t) -> AlphaBeta:
    """Archimedean spiral: magnitude ramps to ``V`` over one rated revolution."""
    t = np.asarray(t, dtype=float)
    w = p.omega0
    t_a = p.t0
    ramp = p.v_hat / (2.0 * math.pi) * w * t
    after = w * (t - t_a)
    inside = t <= t_a
    alpha = np.where(inside, ramp * np.cos(w * t), p.v_hat * np.cos(after))
    beta = np.where(inside, ramp * np.sin(w * t), p.v_hat * np.sin(after))
    return AlphaBeta(alpha, beta)


def profile_voltage(profile, p: SystemParams, t) -> AlphaBeta:
    if profile.tag == "hard":
        return hard_voltage(p, t)
    if profile.tag == "ultrafast":
        return ultrafast_voltage(p, t)
    if profile.tag == "spiral":
        return spiral_voltage(p, t)
    z = np.zeros_like(np.asarray(t, dtype=float))
    return AlphaBeta(z, z.copy())


def analytic_flux(profile, p: SystemParams, t) -> AlphaBeta:
    """Exact integral of the profile voltage from 0 to ``t`` (no resistance)."""
    t = np.asarray(t, dtype=float)
    lam0 = p.lambda0
    w = p.omega0
    if profile.tag == "hard":
        return AlphaBeta(lam0 * np.sin(w * t), lam0 - lam0 * np.cos(w * t))
    if profile.tag == "ultrafast":
        t_d = p.t0 / (2.0 * math.pi)
        s = w * (t - t_d)
        before = t <= t_d
        return AlphaBeta(
            np.where(before, p.v_hat * t, lam0 * np.cos(s)),
            np.where(before, 0.0, lam0 * np.sin(s)),
        )
    if profile.tag == "spiral":
        t_a = p.t0
        k = p.v_hat * w / (2.0 * math.pi)
        wt = w * t
        s = w * (t - t_a)
        inside = t <= t_a
        # antiderivatives of k*t*cos(wt) and k*t*sin(wt)
        alpha_in = k * (t * np.sin(wt) / w + (np.cos(wt) - 1.0) / w**2)
        beta_in = k * (-t * np.cos(wt) / w + np.sin(wt) / w**2)
        return AlphaBeta(
            np.where(inside, alpha_in, lam0 * np.sin(s)),
            np.where(inside, beta_in, -lam0 * np.cos(s)),
        )
    z = np.zeros_like(t)
    return AlphaBeta(z, z.copy())


def _window_means(t, y, starts, width):
    """Time-weighted means of ``y`` over ``[s, s + width]`` for each start."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))))
    starts = np.asarray(starts, dtype=float)
    return (np.interp(starts + width, t, cum) - np.interp(starts, t, cum)) / width


def flux_dc_offset(t, flux: AlphaBeta, p: SystemParams) -> AlphaBeta:
    """Mean flux vector over the trailing fundamental period.

    ``t`` is the sample time grid and ``flux`` holds the matching alpha/beta
    arrays. Raises :class:`InsufficientSpan` if ``t`` covers less than ``T0``.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 2 or t[-1] - t[0] < p.t0 * (1.0 - 1e-9):
        raise InsufficientSpan("insufficient span: trajectory shorter than one fundamental period")
    start = max(t[-1] - p.t0, t[0])
    width = t[-1] - start
    return AlphaBeta(
        float(_window_means(t, flux.alpha, [start], width)[0]),
        float(_window_means(t, flux.beta, [start], width)[0]),
    )


def cycle_offsets(t, flux: AlphaBeta, p: SystemParams, start=None):
    """Offset magnitude of every whole fundamental cycle from ``start`` on.

    Returns ``(window_start_times, magnitudes)``.
    """
    t = np.asarray(t, dtype=float)
    start = t[0] if start is None else start
    n = int(math.floor((t[-1] - start) / p.t0 + 1e-9))
    if n < 1:
        return np.empty(0), np.empty(0)
    starts = start + p.t0 * np.arange(n)
    ma = _window_means(t, flux.alpha, starts, p.t0)
    mb = _window_means(t, flux.beta, starts, p.t0)
    return starts, np.hypot(ma, mb)

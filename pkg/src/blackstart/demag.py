"""Inverter-driven demagnetization and residual-flux establishment.

The demagnetization sequence works without knowing the residual flux:

1. closed-loop current control drives the core into a known saturation point
   with phase currents ``(+i_sat, 0, -i_sat)``;
2. an open-loop DC pattern ``(-v_d, 0, +v_d)`` drives it into the opposite
   saturation, and the time this takes is measured;
3. the pattern ``(+v_d, 0, -v_d)`` is applied for half that time, which
   leaves the flux at the origin of a symmetric magnetization curve.

The per-step state machine lives in the integration kernels so that whole
sequences run in compiled code; :func:`demag_controller` exposes one step of
the same logic for inspection and testing.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from blackstart import _kernels_py
from blackstart import _layout as L
from blackstart.errors import DemagTimeout
from blackstart.frames import ThreePhase


class DemagPhase(enum.IntEnum):
    SATURATE_POSITIVE = L.PH_SATURATE_POSITIVE
    REVERSE_SATURATE = L.PH_REVERSE_SATURATE
    RETURN_TO_ORIGIN = L.PH_RETURN_TO_ORIGIN
    DONE = L.PH_DONE


@dataclass(frozen=True)
class DemagParams:
    """Thresholds and drive levels of the sequence.

    ``settle_time`` is how long the current loop keeps holding
    ``(+i_sat, 0, -i_sat)`` after both outer phases crossed their thresholds,
    so the filter transient has died out before the open-loop reversal.
    """

    i_sat: float = 3.0
    v_d: float = 10.0
    ctrl_bandwidth: float = 500.0
    timeout: float = 1.0
    settle_time: float = 0.03

    def __post_init__(self):
        for name in ("i_sat", "v_d", "ctrl_bandwidth", "timeout"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.settle_time >= 0:
            raise ValueError("settle_time must be non-negative")

    def gains(self, l_loop):
        """PI gains for the current loop around inductance ``l_loop``.

        The proportional gain places the loop pole at ``ctrl_bandwidth``; the
        integral gain gives a damping ratio of 1/sqrt(2) on an inductive plant.
        """
        wb = 2.0 * math.pi * self.ctrl_bandwidth
        kp = wb * l_loop
        return kp, kp * wb / 2.0

    def slew_rate(self):
        """Reference slew limit (A/s): full threshold current in 1/(2 pi bw)."""
        return self.i_sat * 2.0 * math.pi * self.ctrl_bandwidth


@dataclass(frozen=True)
class DemagState:
    phase: DemagPhase = DemagPhase.SATURATE_POSITIVE
    tau_measured: float = 0.0
    elapsed: float = 0.0
    integrator: ThreePhase = ThreePhase(0.0, 0.0, 0.0)
    reference: ThreePhase = ThreePhase(0.0, 0.0, 0.0)
    command: ThreePhase = ThreePhase(0.0, 0.0, 0.0)
    latched_a: bool = False
    latched_c: bool = False
    settled_for: float = 0.0
    started: bool = False


@dataclass(frozen=True)
class Prefluxing:
    """DC pattern applied to the de-energized core before a start."""

    pattern_v: ThreePhase
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError("prefluxing duration must be non-negative")


def build_residual_flux(pattern: ThreePhase, duration: float) -> Prefluxing:
    """Prefluxing phase that leaves residual flux behind.

    The pattern is applied for ``duration`` and then removed; the flux reached
    becomes the initial condition of the following start. A zero duration
    leaves the core untouched.
    """
    if not duration >= 0:
        raise ValueError("duration must be non-negative")
    return Prefluxing(ThreePhase(*(float(v) for v in pattern)), float(duration))


def pack_params(dp: DemagParams, l_loop, v_clamp, par=None):
    """Write the demag entries of a kernel parameter vector."""
    par = np.zeros(L.N_PAR) if par is None else par
    kp, ki = dp.gains(l_loop)
    par[L.P_ISAT] = dp.i_sat
    par[L.P_VD] = dp.v_d
    par[L.P_KP] = kp
    par[L.P_KI] = ki
    par[L.P_VCLAMP] = v_clamp
    par[L.P_TIMEOUT] = dp.timeout
    par[L.P_SLEW] = dp.slew_rate()
    par[L.P_SETTLE] = dp.settle_time
    return par


def _to_ctl(ds: DemagState, dt):
    ctl = np.zeros(L.N_CTL)
    ctl[L.C_PHASE] = int(ds.phase)
    ctl[L.C_TAU_STEPS] = round(ds.tau_measured / dt)
    ctl[L.C_ELAPSED_STEPS] = round(ds.elapsed / dt)
    ctl[L.C_INTEG:L.C_INTEG + 3] = ds.integrator
    ctl[L.C_CMD:L.C_CMD + 3] = ds.command
    ctl[L.C_REF:L.C_REF + 3] = ds.reference
    ctl[L.C_LATCH_A] = float(ds.latched_a)
    ctl[L.C_LATCH_C] = float(ds.latched_c)
    ctl[L.C_STARTED] = float(ds.started)
    ctl[L.C_SETTLE_STEPS] = round(ds.settled_for / dt)
    return ctl


def state_from_ctl(ctl, dt) -> DemagState:
    return DemagState(
        phase=DemagPhase(int(ctl[L.C_PHASE])),
        tau_measured=ctl[L.C_TAU_STEPS] * dt,
        elapsed=ctl[L.C_ELAPSED_STEPS] * dt,
        integrator=ThreePhase(*map(float, ctl[L.C_INTEG:L.C_INTEG + 3])),
        reference=ThreePhase(*map(float, ctl[L.C_REF:L.C_REF + 3])),
        command=ThreePhase(*map(float, ctl[L.C_CMD:L.C_CMD + 3])),
        latched_a=bool(ctl[L.C_LATCH_A]),
        latched_c=bool(ctl[L.C_LATCH_C]),
        settled_for=ctl[L.C_SETTLE_STEPS] * dt,
        started=bool(ctl[L.C_STARTED]),
    )


def demag_controller(dp: DemagParams, ds: DemagState, i_inv: ThreePhase, dt, *,
                     l_loop, v_clamp):
    """One controller update from the measured inverter currents.

    Returns ``(command, next_state)``; the command is held for the next step.
    ``l_loop`` is the inductance the current loop is tuned against and
    ``v_clamp`` the output limit. Raises :class:`DemagTimeout` when a phase
    outlasts ``dp.timeout``.
    """
    par = pack_params(dp, l_loop, v_clamp)
    ctl = _to_ctl(ds, dt)
    status = _kernels_py.demag_update(ctl, par, float(i_inv[0]), float(i_inv[1]), float(i_inv[2]), dt)
    nxt = state_from_ctl(ctl, dt)
    if status == L.ST_TIMEOUT:
        raise DemagTimeout(nxt.phase.name, nxt.elapsed)
    return nxt.command, nxt

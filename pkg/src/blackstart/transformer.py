"""Three-phase three-limb saturable transformer seen from the fed winding.

The core has no zero-sequence flux path, so the flux-linkage triple always sums
to zero. Magnetization is single-valued and piecewise linear with one knee;
residual flux enters only as an initial condition.
"""
from dataclasses import dataclass

import numpy as np

from blackstart.errors import UnphysicalResidual
from blackstart.frames import AlphaBeta, ThreePhase, alphabeta_to_abc

#: Residual flux beyond this multiple of the rated flux is rejected.
RESIDUAL_BOUND = 1.5


@dataclass(frozen=True)
class CoreParams:
    """Magnetizing branch and winding constants.

    Parameters
    ----------
    lambda_knee : float
        Knee flux linkage (Wb).
    l_mag : float
        Unsaturated magnetizing inductance (H).
    l_sat : float
        Incremental inductance above the knee (H).
    r_core : float
        Core-loss resistance in parallel with the magnetizing branch (ohm).
    r_wind : float
        Series winding resistance (ohm).
    """

    lambda_knee: float
    l_mag: float
    l_sat: float
    r_core: float
    r_wind: float

    def __post_init__(self):
        if not 0 < self.l_sat < self.l_mag:
            raise ValueError("need 0 < l_sat < l_mag")
        if not self.lambda_knee > 0:
            raise ValueError("lambda_knee must be positive")
        if not self.r_core > 0:
            raise ValueError("r_core must be positive")
        if not self.r_wind >= 0:
            raise ValueError("r_wind must be non-negative")

    @classmethod
    def calibrated(cls, lambda0):
        """Default curve: knee at 1.15 rated flux, saturation slope l_mag/120."""
        l_mag = 4.3
        return cls(lambda_knee=1.15 * lambda0, l_mag=l_mag, l_sat=l_mag / 120.0,
                   r_core=2000.0, r_wind=0.3)

    def lossless(self):
        """Same curve with the winding resistance removed and the core loss open."""
        return CoreParams(self.lambda_knee, self.l_mag, self.l_sat, 1e9, 0.0)


@dataclass(frozen=True)
class TransformerState:
    lam: ThreePhase


def magnetizing_current(core: CoreParams, lam):
    """Per-phase magnetizing current of the piecewise-linear curve.

    Odd, continuous and strictly increasing in ``lam``. Accepts scalars or
    arrays.
    """
    lam = np.asarray(lam, dtype=float)
    mag = np.abs(lam)
    sat = core.lambda_knee / core.l_mag + (mag - core.lambda_knee) / core.l_sat
    out = np.where(mag <= core.lambda_knee, lam / core.l_mag, np.copysign(sat, lam))
    return out if out.ndim else float(out)


def state_derivative(core: CoreParams, state: TransformerState, v_pcc: ThreePhase):
    """Flux derivative and terminal current for a PCC voltage.

    Returns ``(dlam_dt, i_pcc)`` as :class:`ThreePhase`. The flux derivative
    has its zero-sequence part removed, so it sums to zero.
    """
    i_pcc = [magnetizing_current(core, l) + v / core.r_core for l, v in zip(state.lam, v_pcc)]
    e = [v - core.r_wind * i for v, i in zip(v_pcc, i_pcc)]
    mean = (e[0] + e[1] + e[2]) / 3.0
    return ThreePhase(*(x - mean for x in e)), ThreePhase(*i_pcc)


def set_residual_flux(state: TransformerState, residual: AlphaBeta, lambda0) -> TransformerState:
    """Replace the core flux by ``residual`` (stationary frame, Wb)."""
    mag = float(np.hypot(*residual))
    if mag > RESIDUAL_BOUND * lambda0:
        raise UnphysicalResidual(
            f"unphysical residual flux: |{mag:.4g}| Wb exceeds {RESIDUAL_BOUND} x rated flux")
    return TransformerState(lam=ThreePhase(*(float(x) for x in alphabeta_to_abc(residual))))

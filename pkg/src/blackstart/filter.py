"""Converter-side LC output filter.

The capacitor voltage is the PCC voltage that drives the transformer.
"""
import math
from dataclasses import dataclass

from blackstart.frames import ThreePhase


@dataclass(frozen=True)
class FilterParams:
    l_f: float
    c_f: float
    r_damp: float = 0.0

    def __post_init__(self):
        if not self.l_f > 0:
            raise ValueError("filter inductance must be positive")
        if not self.c_f > 0:
            raise ValueError("filter capacitance must be positive")
        if not self.r_damp >= 0:
            raise ValueError("damping resistance must be non-negative")

    @classmethod
    def default(cls):
        """3.4 mH / 5 uF, undamped."""
        return cls(l_f=3.4e-3, c_f=5e-6, r_damp=0.0)

    @property
    def z0(self):
        """Characteristic impedance sqrt(L/C)."""
        return math.sqrt(self.l_f / self.c_f)


@dataclass(frozen=True)
class FilterState:
    i_inv: ThreePhase
    v_c: ThreePhase


def filter_derivative(fp: FilterParams, fs: FilterState, v_inv: ThreePhase, i_pcc: ThreePhase):
    """Return ``(di_inv/dt, dv_c/dt)`` per phase."""
    di = ThreePhase(*((v - vc - fp.r_damp * i) / fp.l_f for v, vc, i in zip(v_inv, fs.v_c, fs.i_inv)))
    dv = ThreePhase(*((i - ip) / fp.c_f for i, ip in zip(fs.i_inv, i_pcc)))
    return di, dv


def resonance_frequency(fp: FilterParams) -> float:
    """Undamped LC resonance in Hz."""
    return 1.0 / (2.0 * math.pi * math.sqrt(fp.l_f * fp.c_f))

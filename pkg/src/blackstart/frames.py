"""Stationary-frame vector types and the amplitude-invariant Clarke transform.

Fields may be floats or equally shaped numpy arrays; all operations are
elementwise.
"""
import math
from typing import NamedTuple

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0


class ThreePhase(NamedTuple):
    """Per-phase samples of one quantity (V, A or Wb)."""

    a: float
    b: float
    c: float

    def zero_sequence(self):
        return (self.a + self.b + self.c) / 3.0


class AlphaBeta(NamedTuple):
    """Stationary-frame 2-vector."""

    alpha: float
    beta: float

    def magnitude(self):
        return np.hypot(self.alpha, self.beta)


def abc_to_alphabeta(x: ThreePhase) -> AlphaBeta:
    """Amplitude-invariant Clarke transform; the zero sequence is dropped.

    A balanced set of peak amplitude ``V`` maps to a vector of magnitude ``V``.

    >>> abc_to_alphabeta(ThreePhase(2.0, -1.0, -1.0))
    AlphaBeta(alpha=2.0, beta=0.0)
    """
    a, b, c = x
    alpha = (2.0 / 3.0) * (a - 0.5 * b - 0.5 * c)
    beta = (2.0 / 3.0) * SQRT3_2 * (b - c)
    return AlphaBeta(alpha, beta)


def alphabeta_to_abc(x: AlphaBeta) -> ThreePhase:
    """Inverse Clarke transform with zero zero-sequence."""
    alpha, beta = x
    return ThreePhase(alpha, -0.5 * alpha + SQRT3_2 * beta, -0.5 * alpha - SQRT3_2 * beta)


def balanced(amplitude, angle) -> ThreePhase:
    """Balanced positive-sequence set ``amplitude * cos(angle - k*2pi/3)``."""
    return ThreePhase(
        amplitude * np.cos(angle),
        amplitude * np.cos(angle - 2.0 * math.pi / 3.0),
        amplitude * np.cos(angle + 2.0 * math.pi / 3.0),
    )

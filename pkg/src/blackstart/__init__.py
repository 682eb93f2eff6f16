"""Black-start transformer energization by a grid-forming converter.

Simulates an inverter, its LC filter and a saturable three-limb transformer,
with three magnetization voltage profiles and an inverter-driven
demagnetization sequence.
"""
from importlib.metadata import PackageNotFoundError, version

from blackstart.demag import DemagParams, build_residual_flux, demag_controller
from blackstart.filter import FilterParams
from blackstart.frames import AlphaBeta, ThreePhase, abc_to_alphabeta, alphabeta_to_abc
from blackstart.profiles import SystemParams, analytic_flux, flux_dc_offset, make_profile
from blackstart.sim import Metrics, Scenario, SimResult, compute_metrics, default_scenario, run
from blackstart.transformer import CoreParams

try:
    __version__ = version("blackstart")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "AlphaBeta", "CoreParams", "DemagParams", "FilterParams", "Metrics", "Scenario",
    "SimResult", "SystemParams", "ThreePhase", "abc_to_alphabeta", "alphabeta_to_abc",
    "analytic_flux", "build_residual_flux", "compute_metrics", "demag_controller",
    "flux_dc_offset", "make_profile", "default_scenario", "run",
]

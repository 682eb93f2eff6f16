"""Method comparison matrix and its O/X verdicts."""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

from blackstart.demag import build_residual_flux
from blackstart.errors import BlackstartError
from blackstart.frames import ThreePhase, abc_to_alphabeta
from blackstart.profiles import PROFILE_NAMES
from blackstart.sim import OFFSET_TOLERANCE, Scenario, default_scenario, run

RESIDUAL_CASES = ("none", "residual", "residual+demag")

#: Peak currents below this many per-unit count as suppressed.
SUPPRESSION_LIMIT_PU = 0.3

#: Energization horizon for the hard method, long enough for its offset to die out.
HARD_HORIZON_S = 45.0

PREFLUX_PATTERN_V = ThreePhase(10.0, 0.0, -10.0)

#: Residual flux left by the prefluxing step, as a fraction of the rated flux.
PREFLUX_RESIDUAL = 0.5


def preflux_duration(lambda0, fraction=PREFLUX_RESIDUAL, pattern=PREFLUX_PATTERN_V):
    """Time for ``pattern`` to build a residual of ``fraction * lambda0`` (lossless).

    The pattern ``(v, 0, -v)`` moves the flux vector at ``2 v / sqrt(3)`` V
    along the 30 degree axis.
    """
    rate = math.hypot(*abc_to_alphabeta(pattern))
    return fraction * lambda0 / rate


@dataclass(frozen=True)
class Case:
    method: str
    residual: str
    filter: bool

    @property
    def label(self):
        return f"{self.method}/{self.residual}/{'filter' if self.filter else 'no-filter'}"


def cases():
    return [Case(m, r, f) for m in PROFILE_NAMES for r in RESIDUAL_CASES for f in (True, False)]


def case_scenario(case: Case, hard_horizon=HARD_HORIZON_S) -> Scenario:
    sc = default_scenario(case.method, case.filter)
    if case.residual != "none":
        pre = build_residual_flux(PREFLUX_PATTERN_V, preflux_duration(sc.params.lambda0))
        sc = replace(sc, prefluxing=pre, demag_first=case.residual == "residual+demag")
    if case.method == "hard":
        sc = replace(sc, t_end=hard_horizon, record_every=100)
    return sc


@dataclass(frozen=True)
class Row:
    case: Case
    peak_i_pcc_pu: Optional[float] = None
    peak_i_inv_pu: Optional[float] = None
    flux_offset_wb: Optional[float] = None
    startup_time_s: Optional[float] = None
    offset_settle_time_s: Optional[float] = None
    lambda0: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None

    def verdicts(self):
        """``{criterion: "O" | "X"}``; empty for a failed run."""
        if not self.ok:
            return {}
        return {
            "offset_eliminated": _ox(self.flux_offset_wb < OFFSET_TOLERANCE * self.lambda0),
            "inrush_suppressed": _ox(self.peak_i_pcc_pu < SUPPRESSION_LIMIT_PU),
            "surge_suppressed": _ox(self.peak_i_inv_pu < SUPPRESSION_LIMIT_PU),
        }


def _ox(flag):
    return "O" if flag else "X"


def run_case(case: Case, hard_horizon=HARD_HORIZON_S) -> Row:
    sc = case_scenario(case, hard_horizon)
    try:
        m = run(sc).metrics
    except BlackstartError as e:
        return Row(case, lambda0=sc.params.lambda0, error=str(e))
    return Row(case, m.peak_i_pcc_pu, m.peak_i_inv_pu, m.flux_dc_offset_wb, m.startup_time_s,
               m.offset_settle_time_s, sc.params.lambda0)


def thread_count(n_jobs):
    env = os.environ.get("BLACKSTART_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def run_matrix(selected=None, hard_horizon=HARD_HORIZON_S):
    """Run every case (or ``selected``) in parallel; rows keep the case order."""
    selected = cases() if selected is None else list(selected)
    with ThreadPoolExecutor(max_workers=thread_count(len(selected))) as pool:
        return list(pool.map(lambda c: run_case(c, hard_horizon), selected))


def method_verdicts(rows):
    """Per-method verdicts from the filtered, residual-free runs.

    Surge current only exists with the LC filter, so those runs represent each
    method.
    """
    out = {}
    for r in rows:
        if r.case.residual == "none" and r.case.filter and r.ok:
            v = r.verdicts()
            v["startup"] = _startup_text(r)
            out[r.case.method] = v
    return out


def _startup_text(r: Row):
    if r.startup_time_s is None:
        return "not reached"
    text = "instantaneous" if r.startup_time_s == 0 else f"{r.startup_time_s * 1e3:.2f} ms"
    if r.offset_settle_time_s is not None and r.offset_settle_time_s > 1.0:
        text += f", offset settles in {r.offset_settle_time_s:.1f} s"
    return text


def summary_text(rows):
    mv = method_verdicts(rows)
    names = {"hard": "hard", "ultrafast": "ultra-fast", "spiral": "spiral"}
    crit = [("Flux DC offset elimination", "offset_eliminated"),
            ("Inrush current suppression", "inrush_suppressed"),
            ("Surge current suppression", "surge_suppressed"),
            ("Start-up time", "startup")]
    methods = [m for m in PROFILE_NAMES if m in mv]
    lines = ["Magnetization method comparison (LC filter on, no residual flux)", ""]
    lines.append("| Criterion | " + " | ".join(names[m] for m in methods) + " |")
    lines.append("|---|" + "---|" * len(methods))
    for title, key in crit:
        lines.append(f"| {title} | " + " | ".join(mv[m][key] for m in methods) + " |")
    lines += ["", f"Thresholds: offset < {OFFSET_TOLERANCE:.0%} of rated flux, "
              f"peak currents < {SUPPRESSION_LIMIT_PU} p.u.", ""]
    lines.append("All runs:")
    for r in rows:
        if r.ok:
            v = r.verdicts()
            lines.append(f"  {r.case.label:36s} offset {v['offset_eliminated']}  "
                         f"inrush {v['inrush_suppressed']}  surge {v['surge_suppressed']}")
        else:
            lines.append(f"  {r.case.label:36s} FAILED: {r.error}")
    return "\n".join(lines) + "\n"

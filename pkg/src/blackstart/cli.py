"""Command-line interface.

Exit codes: 0 success, 2 usage or scenario error, 3 numerical divergence,
4 demagnetization timeout, 5 some comparison rows failed.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from blackstart import __version__, comparison, scenario_io
from blackstart.errors import DemagTimeout, NumericalDivergence
from blackstart.frames import AlphaBeta
from blackstart.profiles import PROFILE_NAMES, make_profile
from blackstart.sim import run

SCHEMA_VERSION = 1

WAVEFORM_HEADER = (
    ["t_s"]
    + [f"{q}_{ph}" for q in ("v_inv", "v_pcc", "i_inv", "i_pcc", "lambda") for ph in "abc"]
    + ["lambda_alpha", "lambda_beta"]
)
TRAJECTORY_HEADER = ["t_s", "lambda_alpha", "lambda_beta"]
COMPARISON_HEADER = [
    "method", "residual_case", "filter", "peak_i_pcc_pu", "peak_i_inv_pu", "flux_offset_wb",
    "startup_time_s", "offset_eliminated", "inrush_suppressed", "surge_suppressed", "status",
]
SWEEP_HEADER = ["residual_wb", "peak_i_pcc_pu", "flux_offset_wb"]
DEMAG_SUITE_HEADER = [
    "residual_alpha_wb", "residual_beta_wb", "final_lambda_max_wb", "flux_offset_wb",
    "peak_i_pcc_pu", "demag_duration_s",
]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def _matrix_csv(header, columns):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    # adding 0.0 turns -0.0 into 0.0
    np.savetxt(buf, np.column_stack(columns) + 0.0, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _json(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_outputs(out_dir, files):
    """Write ``{name: text}`` into ``out_dir``; each file appears complete or not at all."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
            staged.append((tmp, os.path.join(out_dir, name)))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _metrics_doc(metrics, scenario):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "blackstart",
        "tool_version": __version__,
        "metrics": metrics.to_dict(),
        "scenario": scenario_io.scenario_to_dict(scenario),
    }


def simulation_files(result, scenario):
    s = result.series
    lam_ab = s.lam_alphabeta
    cols = [s.t, s.v_inv, s.v_pcc, s.i_inv, s.i_pcc, s.lam, lam_ab.alpha, lam_ab.beta]
    return {
        "waveforms.csv": _matrix_csv(WAVEFORM_HEADER, cols),
        "trajectory.csv": _matrix_csv(TRAJECTORY_HEADER, [s.t, lam_ab.alpha, lam_ab.beta]),
        "metrics.json": _json(_metrics_doc(result.metrics, scenario)),
    }


def _fail(msg, code):
    print(f"blackstart: {msg}", file=sys.stderr)
    return code


def _run_or_code(scenario):
    try:
        return run(scenario), 0
    except NumericalDivergence as e:
        return None, _fail(str(e), 3)
    except DemagTimeout as e:
        return None, _fail(str(e), 4)


def _load(args):
    if args.scenario is None:
        sc = scenario_io.scenario_from_dict(scenario_io.preset())
    else:
        sc = scenario_io.load(args.scenario)
    if getattr(args, "no_filter", False):
        sc = replace(sc, filter=None)
    return sc


def cmd_simulate(args):
    sc = _load(args)
    result, code = _run_or_code(sc)
    if code:
        return code
    write_outputs(args.out, simulation_files(result, sc))
    m = result.metrics
    print(f"{m.method}: peak i_pcc {m.peak_i_pcc_pu:.3f} p.u., peak i_inv {m.peak_i_inv_pu:.3f} p.u., "
          f"offset {m.flux_dc_offset_wb * 1e3:.2f} mWb")
    return 0


def cmd_compare(args):
    rows = comparison.run_matrix()
    table = []
    for r in rows:
        v = r.verdicts()
        table.append([r.case.method, r.case.residual, "on" if r.case.filter else "off",
                      r.peak_i_pcc_pu, r.peak_i_inv_pu, r.flux_offset_wb,
                      "not reached" if r.ok and r.startup_time_s is None else r.startup_time_s,
                      v.get("offset_eliminated", ""), v.get("inrush_suppressed", ""),
                      v.get("surge_suppressed", ""), "ok" if r.ok else f"failed: {r.error}"])
    summary = comparison.summary_text(rows)
    write_outputs(args.out, {"comparison.csv": _rows_csv(COMPARISON_HEADER, table),
                             "summary.md": summary})
    sys.stdout.write(summary)
    return 0 if all(r.ok for r in rows) else 5


def cmd_sweep(args):
    base = _load(args)
    base = replace(base, profile=make_profile(args.profile, base.params))
    mags = np.linspace(0.0, base.core.lambda_knee, args.points)

    def one(mag):
        r, code = _run_or_code(replace(base, residual=AlphaBeta(float(mag), 0.0), prefluxing=None))
        return (None if code else (mag, r.metrics.peak_i_pcc_pu, r.metrics.flux_dc_offset_wb)), code

    with ThreadPoolExecutor(max_workers=comparison.thread_count(len(mags))) as pool:
        results = list(pool.map(one, mags))
    for _, code in results:
        if code:
            return code
    rows = [row for row, _ in results]
    write_outputs(args.out, {"sweep.csv": _rows_csv(SWEEP_HEADER, rows)})
    return 0


def cmd_demag_suite(args):
    base = _load(args)
    base = replace(base, demag_first=True, prefluxing=None, record_every=max(base.record_every, 10))
    rng = np.random.default_rng(args.seed)
    knee = base.core.lambda_knee
    # uniform over the disc of radius lambda_knee
    radii = knee * np.sqrt(rng.uniform(size=args.count))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=args.count)
    residuals = [AlphaBeta(float(r * math.cos(a)), float(r * math.sin(a))) for r, a in zip(radii, angles)]

    def one(res):
        r, code = _run_or_code(replace(base, residual=res))
        if code:
            return None, code
        m = r.metrics
        row = (res.alpha, res.beta, max(abs(x) for x in r.demag_residual), m.flux_dc_offset_wb,
               m.peak_i_pcc_pu, m.demag_duration_s)
        return row, 0

    with ThreadPoolExecutor(max_workers=comparison.thread_count(len(residuals))) as pool:
        results = list(pool.map(one, residuals))
    rows = []
    for row, code in results:
        if code:
            return code
        rows.append(row)
    write_outputs(args.out, {"demag_suite.csv": _rows_csv(DEMAG_SUITE_HEADER, rows)})
    lam0 = base.params.lambda0
    worst = max(row[2] for row in rows)
    print(f"{len(rows)} residuals: worst final phase flux {worst / lam0:.2%} of rated, "
          f"worst start offset {max(row[3] for row in rows) / lam0:.2%}, "
          f"worst peak i_pcc {max(row[4] for row in rows):.3f} p.u.")
    return 0


def _points(text):
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("need at least 2 points")
    return n


def build_parser():
    ap = argparse.ArgumentParser(prog="blackstart", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"blackstart {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-filter", action="store_true", help="remove the LC filter")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run the method comparison matrix")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-residual", help="peak current versus residual flux magnitude")
    p.add_argument("--profile", required=True, choices=PROFILE_NAMES)
    p.add_argument("--points", required=True, type=_points)
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", help="base scenario (default: built-in preset)")
    p.add_argument("--no-filter", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demag-suite", help="demagnetize from random residuals, then start")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_points, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", help="base scenario (default: built-in preset)")
    p.add_argument("--no-filter", action="store_true")
    p.set_defaults(func=cmd_demag_suite)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except scenario_io.ScenarioError as e:
        return _fail(str(e), 2)
    except OSError as e:
        return _fail(str(e), 2)


if __name__ == "__main__":
    sys.exit(main())

"""Scenario files: JSON schema, defaults and conversion to :class:`Scenario`."""
import copy
import json
import math
from importlib import resources

import jsonschema

from blackstart.demag import DemagParams, Prefluxing
from blackstart.filter import FilterParams
from blackstart.frames import AlphaBeta, ThreePhase
from blackstart.profiles import PROFILE_NAMES, SystemParams, make_profile
from blackstart.sim import Scenario
from blackstart.transformer import CoreParams


class ScenarioError(ValueError):
    """Scenario file that cannot be parsed or fails validation."""


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_NUM = {"type": "number"}

SCHEMA = _obj({
    "system": _obj({k: _POS for k in ("v_ll_rms", "f0", "s_rated", "v_dc", "i_rated_peak", "f_sw")}),
    "core": _obj({"lambda_knee": _POS, "l_mag": _POS, "l_sat": _POS, "r_core": _POS, "r_wind": _NONNEG}),
    "filter": {"oneOf": [{"type": "null"}, _obj({"l_f": _POS, "c_f": _POS, "r_damp": _NONNEG})]},
    "profile": {"enum": list(PROFILE_NAMES)},
    "residual_wb": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
    "prefluxing": _obj({
        "pattern_v": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
        "duration_s": _NONNEG,
    }, required=("pattern_v", "duration_s")),
    "demag_first": {"type": "boolean"},
    "demag": _obj({"i_sat": _POS, "v_d": _POS, "ctrl_bandwidth": _POS, "timeout_s": _POS,
                   "settle_time_s": _NONNEG}),
    "dt_s": _POS,
    "t_end_s": _POS,
    "control_zoh": {"type": "boolean"},
    "record_every": {"type": "integer", "minimum": 1},
})
SCHEMA["$schema"] = "https://json-schema.org/draft/2020-12/schema"
SCHEMA["not"] = {"required": ["residual_wb", "prefluxing"]}


def preset(name="default"):
    """Built-in scenario document."""
    text = resources.files("blackstart").joinpath("presets", f"{name}.json").read_text()
    return json.loads(text)


def _path(err):
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(doc):
    """Raise :class:`ScenarioError` naming the offending field."""
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            if e.validator == "not" and not e.absolute_path:
                lines.append("<root>: residual_wb and prefluxing are mutually exclusive")
            else:
                lines.append(f"{_path(e)}: {e.message}")
        raise ScenarioError("invalid scenario:\n  " + "\n  ".join(lines))


def with_defaults(doc):
    """Scenario document with every omitted field filled in."""
    base = preset()
    out = copy.deepcopy(doc)
    for key in ("system", "demag"):
        out[key] = {**base[key], **doc.get(key, {})}
    if "filter" not in doc:
        out["filter"] = base["filter"]
    elif doc["filter"] is not None:
        out["filter"] = {**base["filter"], **doc["filter"]}
    s = out["system"]
    v_hat = s["v_ll_rms"] * math.sqrt(2.0) / math.sqrt(3.0)
    cal = CoreParams.calibrated(v_hat / (2.0 * math.pi * s["f0"]))
    out["core"] = {**{k: getattr(cal, k) for k in ("lambda_knee", "l_mag", "l_sat", "r_core", "r_wind")},
                   **doc.get("core", {})}
    for key in ("profile", "demag_first", "dt_s", "t_end_s", "control_zoh", "record_every"):
        out.setdefault(key, base[key])
    if "prefluxing" not in out:
        out.setdefault("residual_wb", base["residual_wb"])
    return out


def scenario_from_dict(doc) -> Scenario:
    validate(doc)
    d = with_defaults(doc)
    try:
        s = d["system"]
        params = SystemParams.from_ratings(s["v_ll_rms"], s["f0"], s["s_rated"], s["v_dc"],
                                           s["i_rated_peak"], s["f_sw"])
        core = CoreParams(**d["core"])
        filt = FilterParams(**d["filter"]) if d["filter"] is not None else None
        dm = d["demag"]
        demag = DemagParams(dm["i_sat"], dm["v_d"], dm["ctrl_bandwidth"], dm["timeout_s"],
                            dm["settle_time_s"])
        pre = None
        residual = AlphaBeta(0.0, 0.0)
        if "prefluxing" in d:
            pf = d["prefluxing"]
            pre = Prefluxing(ThreePhase(*map(float, pf["pattern_v"])), float(pf["duration_s"]))
        else:
            residual = AlphaBeta(*map(float, d["residual_wb"]))
        return Scenario(params=params, core=core, filter=filt, profile=make_profile(d["profile"], params),
                        residual=residual, demag_first=d["demag_first"], prefluxing=pre, demag=demag,
                        dt=d["dt_s"], t_end=d["t_end_s"], control_zoh=d["control_zoh"],
                        record_every=d["record_every"])
    except ValueError as e:
        raise ScenarioError(f"invalid scenario: {e}") from None


def loads(text) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return scenario_from_dict(doc)


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def scenario_to_dict(sc: Scenario):
    """Full scenario document; loading it gives back an equal scenario."""
    p = sc.params
    doc = {
        "system": {"v_ll_rms": p.v_ll_rms, "f0": p.f0, "s_rated": p.s_rated, "v_dc": p.v_dc,
                   "i_rated_peak": p.i_rated_peak, "f_sw": p.f_sw},
        "core": {k: getattr(sc.core, k) for k in ("lambda_knee", "l_mag", "l_sat", "r_core", "r_wind")},
        "filter": None if sc.filter is None else
        {"l_f": sc.filter.l_f, "c_f": sc.filter.c_f, "r_damp": sc.filter.r_damp},
        "profile": sc.profile.tag,
        "demag_first": sc.demag_first,
        "demag": {"i_sat": sc.demag.i_sat, "v_d": sc.demag.v_d, "ctrl_bandwidth": sc.demag.ctrl_bandwidth,
                  "timeout_s": sc.demag.timeout, "settle_time_s": sc.demag.settle_time},
        "dt_s": sc.dt,
        "t_end_s": sc.t_end,
        "control_zoh": sc.control_zoh,
        "record_every": sc.record_every,
    }
    if sc.prefluxing is not None:
        doc["prefluxing"] = {"pattern_v": list(sc.prefluxing.pattern_v), "duration_s": sc.prefluxing.duration}
    else:
        doc["residual_wb"] = [sc.residual.alpha, sc.residual.beta]
    return doc

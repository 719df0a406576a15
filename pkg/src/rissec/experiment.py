"""Experiment configuration, figure presets and the sweep runner.

Configuration is a flat mapping of dotted keys.  It can be written as
``key = value`` lines (values parsed as JSON when possible, otherwise taken
as bare strings) or as JSON, nested or flat.  Unknown keys are errors.
"""

from __future__ import annotations

import hashlib
import io
import json
import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from rissec import channels as ch
from rissec import metrics as mt
from rissec import montecarlo as mc_mod

__all__ = [
    "ConfigError",
    "SCHEMA",
    "SWEEP_VARIABLES",
    "METHODS",
    "METRICS",
    "CSV_COLUMNS",
    "PRESETS",
    "Experiment",
    "parse_text",
    "parse_json",
    "load_config",
    "build_experiment",
    "build_system",
    "preset",
    "emit_config",
    "run",
    "write_rows",
    "config_digest",
]

CSV_COLUMNS = ("sweep_var", "sweep_value", "metric", "method", "value", "err_lo", "err_hi",
               "wall_ms", "config_digest")
METHODS = ("closed_form", "quadrature", "asymptotic", "monte_carlo")
METRICS = ("sop", "asc", "est")
SWEEP_VARIABLES = ("gamma_bar_s_db", "gamma_bar_e_db", "gamma_bar_d_db", "t_rs", "n_elements",
                   "m_surfaces", "k_main", "k_eve", "xi", "detection")
# asymptotic expansion exists only for the outage probability
SUPPORTED = {
    "sop": METHODS,
    "est": METHODS,
    "asc": ("closed_form", "quadrature", "monte_carlo"),
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _num(path, v, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if integer:
        if float(v) != int(v):
            raise ConfigError(path, f"expected an integer, got {v!r}")
        v = int(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(path, f"must be <= {hi}")
    return v


def _choice(options):
    def check(path, v):
        if v not in options:
            raise ConfigError(path, f"must be one of {list(options)}, got {v!r}")
        return v
    return check


def _strlist(options):
    def check(path, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        if not isinstance(v, list) or not v:
            raise ConfigError(path, "must be a non-empty list")
        for s in v:
            if s not in options:
                raise ConfigError(path, f"unknown entry {s!r}; valid: {list(options)}")
        return list(dict.fromkeys(v))
    return check


def _bool(path, v):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true/false, got {v!r}")
    return v


def _opt_pos(path, v):
    if v is None or v == "":
        return None
    return _num(path, v, 0, lo_open=True)


def _str(path, v):
    if v is None:
        return ""
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    return v


def _pos(path, v):
    return _num(path, v, 0, lo_open=True)


def _nonneg(path, v):
    return _num(path, v, 0)


def _posint(path, v):
    return _num(path, v, 1, integer=True)


SCHEMA = {
    "system.gamma_bar_s_db": (20.0, lambda p, v: _num(p, v)),
    "system.gamma_bar_d_db": (25.0, lambda p, v: _num(p, v)),
    "system.gamma_bar_e_db": (0.0, lambda p, v: _num(p, v)),
    "system.k1_s": (2.0, _nonneg),
    "system.k2_s": (2.0, _nonneg),
    "system.k1_e": (2.0, _nonneg),
    "system.k2_e": (2.0, _nonneg),
    "system.omega1_s": (1.0, _pos),
    "system.omega2_s": (1.0, _pos),
    "system.omega1_e": (1.0, _pos),
    "system.omega2_e": (1.0, _pos),
    "system.n_elements": (2, _posint),
    "system.m_surfaces": (2, _posint),
    "system.alpha": (2.296, _pos),
    "system.beta": (2, _posint),
    "system.g": (ch.DEFAULT_G, _pos),
    "system.omega_big": (ch.DEFAULT_OMEGA, _nonneg),
    "system.xi": (1.1, _pos),
    "system.r": (1, lambda p, v: _choice((1, 2))(p, _num(p, v, integer=True))),
    "system.t_rs": (0.5, _pos),
    "system.n_max": (40, lambda p, v: _num(p, v, 0, integer=True)),
    "system.n_closed": (6, _posint),
    "system.split_point": (None, _opt_pos),
    "sweep.variable": ("gamma_bar_s_db", _choice(SWEEP_VARIABLES)),
    "sweep.values": (None, None),
    "sweep.from": (None, None),
    "sweep.to": (None, None),
    "sweep.step": (None, None),
    "metrics": (["sop"], _strlist(METRICS)),
    "methods": (["quadrature", "monte_carlo"], _strlist(METHODS)),
    "curves": ([], None),
    "mc.samples": (10**6, lambda p, v: _num(p, v, 10**4, integer=True)),
    "mc.batches": (20, lambda p, v: _num(p, v, 10, integer=True)),
    "mc.seed": (20261016, lambda p, v: _num(p, v, 0, 2**64 - 1, integer=True)),
    "mc.mode": ("paper_independent", _choice(mc_mod.MODES)),
    "mc.rf_model": ("physical", _choice(mc_mod.RF_MODELS)),
    "output.format": ("csv", _choice(("csv", "json"))),
    "output.path": ("", _str),
    "output.timing": (False, _bool),
}

# sweep/curve shorthands that map onto one or more system keys
ALIASES = {
    "k_main": ("system.k1_s", "system.k2_s"),
    "k_eve": ("system.k2_e",),
    "detection": ("system.r",),
}


# --------------------------------------------------------------------------- #
# parsing


def _parse_value(text: str):
    text = text.strip()
    if text == "":
        return ""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment line."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {s!r}")
        key, val = s.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = _parse_value(val)
    return out


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict) and path != "curves":
            out.update(_flatten(v, path + "."))
        else:
            out[path] = v
    return out


def parse_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("<json>", "top level must be an object")
    return _flatten(data)


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(path, f"cannot read config ({exc.strerror})") from None
    if text.lstrip().startswith("{"):
        return parse_json(text)
    return parse_text(text)


# --------------------------------------------------------------------------- #
# experiment


@dataclass
class Experiment:
    params: dict
    sweep_var: str
    sweep_values: list
    metrics: list
    methods: list
    curves: list = field(default_factory=list)

    def to_flat(self) -> dict:
        flat = {k: v for k, v in self.params.items() if not k.startswith("sweep.")}
        flat["sweep.variable"] = self.sweep_var
        flat["sweep.values"] = list(self.sweep_values)
        flat["metrics"] = list(self.metrics)
        flat["methods"] = list(self.methods)
        flat["curves"] = [dict(c) for c in self.curves]
        return flat

    def mc_config(self) -> mc_mod.McConfig:
        p = self.params
        return mc_mod.McConfig(p["mc.samples"], p["mc.batches"], p["mc.seed"], p["mc.mode"],
                               p["mc.rf_model"])


def _sweep_check(var, path, v):
    if var in ("n_elements", "m_surfaces"):
        return _posint(path, v)
    if var == "detection":
        return _choice((1, 2))(path, _num(path, v, integer=True))
    if var in ("t_rs", "xi"):
        return _pos(path, v)
    if var in ("k_main", "k_eve"):
        return _nonneg(path, v)
    return _num(path, v)


def _expand_range(flat):
    lo, hi, st = flat.get("sweep.from"), flat.get("sweep.to"), flat.get("sweep.step")
    if any(x is None for x in (lo, hi, st)):
        raise ConfigError("sweep.values", "give sweep.values or all of sweep.from/to/step")
    lo, hi = _num("sweep.from", lo), _num("sweep.to", hi)
    st = _num("sweep.step", st, 0, lo_open=True)
    n = int(math.floor((hi - lo) / st + 1e-9)) + 1
    if n <= 0:
        raise ConfigError("sweep.values", "sweep range is empty")
    return [round(lo + i * st, 12) for i in range(n)]


def _check_curve(i, curve):
    path = f"curves[{i}]"
    if not isinstance(curve, dict):
        raise ConfigError(path, "each curve must be an object of overrides")
    out = {}
    for k, v in _flatten(curve).items():
        key = k if k.startswith("system.") else f"system.{k}"
        short = key[len("system."):]
        if short in ALIASES:
            out[key] = _sweep_check(short, f"{path}.{k}", v)
        elif key in SCHEMA:
            out[key] = SCHEMA[key][1](f"{path}.{k}", v)
        else:
            raise ConfigError(f"{path}.{k}", "unknown key")
    return out


def build_experiment(flat: dict) -> Experiment:
    """Validate a flat mapping and fill defaults."""
    unknown = sorted(set(flat) - set(SCHEMA))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    params = {}
    for key, (default, check) in SCHEMA.items():
        if key.startswith("sweep.") or key == "curves":
            continue
        v = flat.get(key, default)
        params[key] = check(key, v) if check is not None and key in flat else v
    var = SCHEMA["sweep.variable"][1]("sweep.variable", flat.get("sweep.variable", "gamma_bar_s_db"))
    if "sweep.values" in flat:
        vals = flat["sweep.values"]
        if isinstance(vals, (int, float)) and not isinstance(vals, bool):
            vals = [vals]
        if isinstance(vals, str):
            vals = [_parse_value(s) for s in vals.split(",") if s.strip()]
        if not isinstance(vals, list) or len(vals) == 0:
            raise ConfigError("sweep.values", "must be a non-empty list")
    else:
        vals = _expand_range(flat)
    vals = [_sweep_check(var, f"sweep.values[{i}]", v) for i, v in enumerate(vals)]
    curves = flat.get("curves", [])
    if not isinstance(curves, list):
        raise ConfigError("curves", "must be a list of override objects")
    curves = [_check_curve(i, c) for i, c in enumerate(curves)]
    exp = Experiment(params, var, vals, params.pop("metrics"), params.pop("methods"), curves)
    try:
        exp.mc_config()
    except ValueError as exc:
        raise ConfigError("mc", str(exc)) from None
    # build every point once so that cross-field violations surface here
    for pt in _points(exp):
        try:
            build_system(pt[2])
        except ValueError as exc:
            raise ConfigError("system", str(exc)) from None
    return exp


def _apply(params: dict, var: str, value) -> dict:
    p = dict(params)
    if var in ALIASES:
        for k in ALIASES[var]:
            p[k] = value
    else:
        p[f"system.{var}"] = value
    return p


def _points(exp: Experiment):
    """(curve index, sweep value, resolved params) in output order."""
    curves = exp.curves or [{}]
    for ci, curve in enumerate(curves):
        base = dict(exp.params)
        for k, v in curve.items():
            short = k[len("system."):]
            base = _apply(base, short, v) if short in ALIASES else {**base, k: v}
        for v in exp.sweep_values:
            yield ci, v, _apply(base, exp.sweep_var, v)


def build_system(p: dict) -> mt.SystemConfig:
    """SystemConfig from resolved params; the only dB-to-linear conversion point."""
    def lin(db):
        return 10.0 ** (db / 10.0)

    main = ch.RfCascadeConfig(ch.RicianHop(p["system.k1_s"], p["system.omega1_s"]),
                              ch.RicianHop(p["system.k2_s"], p["system.omega2_s"]),
                              p["system.n_elements"], p["system.m_surfaces"], lin(p["system.gamma_bar_s_db"]))
    eve = ch.RfCascadeConfig(ch.RicianHop(p["system.k1_e"], p["system.omega1_e"]),
                             ch.RicianHop(p["system.k2_e"], p["system.omega2_e"]),
                             p["system.n_elements"], p["system.m_surfaces"], lin(p["system.gamma_bar_e_db"]))
    fso = ch.MalagaConfig(p["system.alpha"], p["system.beta"], p["system.g"], p["system.omega_big"],
                          p["system.xi"], p["system.r"], lin(p["system.gamma_bar_d_db"]))
    return mt.SystemConfig(main, eve, fso, p["system.t_rs"], p["system.n_max"], p["system.n_closed"],
                           p["system.split_point"])


def config_digest(params: dict) -> str:
    """Short hash of everything that determines a row's numbers."""
    keep = {k: v for k, v in params.items() if not k.startswith("output.")}
    blob = json.dumps(keep, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------- #
# presets


def _grid(**axes):
    keys = list(axes)
    out = [{}]
    for k in keys:
        out = [{**c, k: v} for c in out for v in axes[k]]
    return out


_SNR_SWEEP = {"sweep.variable": "gamma_bar_s_db", "sweep.from": 0, "sweep.to": 40, "sweep.step": 5}
_SOP_METHODS = ["closed_form", "asymptotic", "quadrature", "monte_carlo"]

PRESETS = {
    "fig_sop_rf": {**_SNR_SWEEP, "metrics": ["sop"], "methods": _SOP_METHODS,
                   "curves": _grid(k_main=[2, 5], gamma_bar_e_db=[0, 5])},
    "fig_asc_rf": {**_SNR_SWEEP, "metrics": ["asc"], "methods": ["closed_form", "quadrature", "monte_carlo"],
                   "curves": _grid(k_main=[2, 5], gamma_bar_e_db=[0, 5])},
    "fig_sop_eve": {**_SNR_SWEEP, "metrics": ["sop"], "methods": _SOP_METHODS,
                    "curves": _grid(k_eve=[2, 5], gamma_bar_e_db=[0, 5])},
    "fig_est": {"sweep.variable": "t_rs", "sweep.from": 0.25, "sweep.to": 4, "sweep.step": 0.25,
                "metrics": ["est"], "methods": ["closed_form", "quadrature", "monte_carlo"],
                "curves": _grid(gamma_bar_e_db=[0, 5])},
    "fig_n_elements": {**_SNR_SWEEP, "metrics": ["sop", "asc"], "methods": ["closed_form", "quadrature", "monte_carlo"],
                       "curves": _grid(n_elements=[1, 3, 5])},
    "fig_m_surfaces": {**_SNR_SWEEP, "metrics": ["sop"], "methods": _SOP_METHODS,
                       "curves": _grid(m_surfaces=[1, 2, 3], gamma_bar_e_db=[0, 5])},
    "fig_turbulence": {**_SNR_SWEEP, "metrics": ["sop"], "methods": _SOP_METHODS,
                       "curves": [{"alpha": a, "beta": b, "xi": x}
                                  for (a, b) in ((2.296, 2), (4.2, 3), (8.0, 4)) for x in (1.1, 6.7)]},
    "fig_detection": {**_SNR_SWEEP, "metrics": ["sop"], "methods": _SOP_METHODS,
                      "curves": _grid(detection=[1, 2], xi=[1.1, 6.7])},
}


def preset(name: str) -> Experiment:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; valid: {sorted(PRESETS)}")
    return build_experiment(dict(PRESETS[name]))


def emit_config(exp: Experiment) -> str:
    """Flat ``key = value`` text that parses back to the same experiment."""
    flat = exp.to_flat()
    lines = []
    for k in sorted(flat):
        v = flat[k]
        if k.startswith("curves"):
            v = [{kk.replace("system.", ""): vv for kk, vv in c.items()} for c in v]
        lines.append(f"{k} = {json.dumps(v)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- #
# runner


def _evaluate(system: mt.SystemConfig, metric: str, method: str, mcfg: mc_mod.McConfig):
    """(value, lo, hi) for one metric/method at one point."""
    if method == "monte_carlo":
        if metric == "asc":
            e = mc_mod.estimate_asc(system, mcfg, workers=1)
        else:
            e = mc_mod.estimate_sop(system, mcfg, workers=1)
            if metric == "est":
                e = mc_mod.est_from_sop(system.t_rs, e)
        return e.mean, e.ci95_lo, e.ci95_hi
    fn = {
        ("sop", "closed_form"): mt.sop_closed_form,
        ("sop", "quadrature"): mt.sop_quadrature,
        ("sop", "asymptotic"): mt.sop_asymptotic,
        ("asc", "closed_form"): mt.asc_closed_form,
        ("asc", "quadrature"): mt.asc_quadrature,
    }[("sop" if metric == "est" else metric, method)]
    r = fn(system)
    if metric == "est":
        v = mt.est(system.t_rs, r.value)
        lo = mt.est(system.t_rs, min(1.0, r.value + r.err_estimate))
        hi = mt.est(system.t_rs, max(0.0, r.value - r.err_estimate))
        return v, lo, hi
    return r.value, r.value - r.err_estimate, r.value + r.err_estimate


def _run_point(task, exp, timing):
    ci, v, params = task
    system = build_system(params)
    mcfg = exp.mc_config()
    digest = config_digest(params)
    rows = []
    for metric in exp.metrics:
        for method in exp.methods:
            if method not in SUPPORTED[metric]:
                continue
            t0 = time.perf_counter()
            row = {"sweep_var": exp.sweep_var, "sweep_value": v, "metric": metric, "method": method,
                   "config_digest": digest, "curve": ci}
            try:
                val, lo, hi = _evaluate(system, metric, method, mcfg)
                row.update(value=val, err_lo=lo, err_hi=hi, error=None)
            except Exception as exc:  # recorded per row, the sweep continues
                row.update(value=None, err_lo=None, err_hi=None, error=f"{type(exc).__name__}: {exc}")
            row["wall_ms"] = (time.perf_counter() - t0) * 1e3 if timing else None
            rows.append(row)
    return rows


def run(exp: Experiment, workers: int | None = None) -> list[dict]:
    """Evaluate every (curve, sweep value, metric, method); rows in that order."""
    tasks = list(_points(exp))
    timing = bool(exp.params.get("output.timing", False))
    workers = mc_mod.default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(tasks) == 1:
        chunks = [_run_point(t, exp, timing) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda t: _run_point(t, exp, timing), tasks))
    return [r for c in chunks for r in c]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(rows: list[dict], fmt: str = "csv") -> str:
    if fmt == "json":
        out = []
        for r in rows:
            d = {k: r.get(k) for k in CSV_COLUMNS}
            d["curve"] = r.get("curve")
            d["error"] = r.get("error")
            out.append({k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()})
        return json.dumps(out, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        value = r["value"] if r.get("error") is None else f"error: {r['error']}"
        w.writerow([_fmt(r["sweep_var"]), _fmt(r["sweep_value"]), r["metric"], r["method"],
                    _fmt(value), _fmt(r["err_lo"]), _fmt(r["err_hi"]), _fmt(r["wall_ms"]),
                    r["config_digest"]])
    return buf.getvalue()

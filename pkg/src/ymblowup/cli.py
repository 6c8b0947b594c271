"""Command-line front end: ``ymblowup <command> [--config FILE] [--set key=value ...]``.

Every command resolves its parameters from built-in defaults, an optional
JSON config file, dedicated flags and ``--set`` overrides (in that order),
validates them, runs, and writes plot-ready CSV plus a JSON report that
embeds the resolved config and the package version.

Exit codes: 0 success, 2 config error, 3 numerical breakdown, 4 inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__

FORMAT_VERSION = 1
ENV_OUTPUT = "YMBLOWUP_OUTPUT_DIR"
DEFAULT_OUTPUT = "ymblowup_out"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INCONCLUSIVE = 0, 2, 3, 4

log = logging.getLogger("ymblowup")


class ConfigError(ValueError):
    pass


class Inconclusive(RuntimeError):
    pass


class Breakdown(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# parameter tables: name -> (type, default, check, help)

def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _int_at_least(k):
    return lambda v: v >= k


def _in_open(a, b):
    return lambda v: a < v < b


_DATA = {
    "data": (str, "zero", lambda v: v in ("zero", "bump", "psiT0", "random", "csv"),
             "perturbation family: zero, bump, psiT0, random, csv"),
    "amplitude": (float, 1e-3, _nonneg, "perturbation amplitude (bump, random)"),
    "seed": (int, 0, _nonneg, "RNG seed for the random family"),
    "T0": (float, 1.05, _in_open(0.5, 1.5), "blowup time of the psiT0 family"),
    "data_csv": (str, "", None, "CSV with columns r, df, dg on [0, 3/2] (data=csv)"),
}

PARAMS = {
    "validate": {
        "n": (int, 201, _int_at_least(3), "grid size for the algebraic identities"),
        "n_oracle": (int, 21, _int_at_least(2), "points for the extended-precision oracle"),
        "tol": (float, 1e-11, _pos, "pass threshold on max error"),
    },
    "spectrum": {
        "re_min": (float, -1.4, lambda v: v > -1.5, "rectangle (Re > -3/2 required)"),
        "re_max": (float, 2.0, None, ""),
        "im_min": (float, -20.0, None, ""),
        "im_max": (float, 20.0, None, ""),
        "n_re": (int, 4, _int_at_least(1), "cells along Re"),
        "n_im": (int, 9, _int_at_least(1), "cells along Im (made odd)"),
        "n_boundary": (int, 24, _int_at_least(8), "initial points per cell edge"),
        "rho_m": (float, 0.5, _in_open(0.0, 1.0), "matching point"),
        "M": (int, 25, _int_at_least(5), "minimum Frobenius series order"),
        "delta": (float, 0.05, _in_open(0.0, 0.5), "series step-off"),
        "rtol": (float, 1e-12, _pos, "integrator relative tolerance"),
        "heatmap_re": (int, 24, _nonneg, "heatmap samples along Re (0 = none)"),
        "heatmap_im": (int, 41, _nonneg, "heatmap samples along Im"),
    },
    "linear-decay": {
        "N": (int, 64, _int_at_least(32), "collocation nodes per component"),
        "tau_max": (float, 8.0, _pos, "horizon"),
        "dtau": (float, 0.0, _nonneg, "step (0 = 0.9 / spectral radius)"),
        "with_potential": (bool, True, None, "evolve L (true) or L0 (false)"),
        "init": (str, "random", lambda v: v in ("random", "g"), "random or g"),
        "project": (bool, True, None, "remove P from random initial data"),
        "n_seeds": (int, 20, _int_at_least(1), "random initial states"),
        "seed": (int, 0, _nonneg, "RNG seed"),
        "window_lo": (float, 2.0, _nonneg, "fit window start"),
        "window_hi": (float, 8.0, _pos, "fit window end"),
        "record_every": (float, 0.25, _pos, "record interval"),
    },
    "evolve-sim": {
        "N": (int, 64, _int_at_least(32), "collocation nodes per component"),
        "dtau": (float, 0.0, _nonneg, "step (0 = automatic)"),
        "tau_max": (float, 8.0, _pos, "duration"),
        "filter": (float, 0.0, _nonneg, "spectral tail damping strength (0 = off)"),
        "record_every": (float, 0.25, _pos, "record interval"),
        "T": (float, 1.0, _in_open(0.5, 1.5), "blowup time used for the data map U(v, T)"),
        **_DATA,
    },
    "tune-T": {
        "N": (int, 64, _int_at_least(32), "collocation nodes per component"),
        "dtau": (float, 0.0, _nonneg, "step (0 = automatic)"),
        "tau_max": (float, 8.0, _pos, "post-tuning decay horizon"),
        "filter": (float, 0.0, _nonneg, "spectral tail damping strength (0 = off)"),
        "record_every": (float, 0.25, _pos, "record interval"),
        "tau_probe": (float, 6.0, lambda v: v > 0.5, "probe time for the unstable amplitude"),
        "xtol": (float, 1e-13, _pos, "root tolerance in T"),
        "window_lo": (float, 2.0, _nonneg, "decay fit window start"),
        "window_hi": (float, 8.0, _pos, "decay fit window end"),
        **_DATA,
    },
    "evolve-phys": {
        "data": (str, "psiT", lambda v: v in ("psiT", "bump", "zero"), "psiT (perturbed) or bump"),
        "T0": (float, 0.9, _in_open(0.5, 1.5), "self-similar blowup time of the base data"),
        "amplitude": (float, 0.016, _nonneg, "bump amplitude"),
        "center": (float, 0.4, _in_open(0.0, 1.5), "bump center"),
        "width": (float, 0.15, _pos, "bump width"),
        "n": (int, 2400, _int_at_least(50), "grid intervals on [0, 3/2]"),
        "cfl": (float, 0.5, _in_open(0.0, 1.0 + 1e-12), "CFL number"),
        "t_max": (float, 1.5, _pos, "horizon"),
        "record_every": (float, 0.002, _pos, "slice interval"),
        "snapshot_every": (float, 0.1, _pos, "interval of CSV snapshots"),
        "snapshot_stride": (int, 4, _int_at_least(1), "grid stride in snapshots"),
        "refine_T": (bool, True, None, "refine T by the profile fit"),
    },
    "fit-rate": {
        "input": (str, "", lambda v: bool(v), "CSV file"),
        "x": (str, "tau", None, "abscissa column"),
        "y": (str, "norm_total", None, "column of positive values"),
        "window_lo": (float, float("-inf"), None, "fit window start"),
        "window_hi": (float, float("inf"), None, "fit window end"),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict
    output_dir: str
    format_version: int = FORMAT_VERSION
    jobs: int = 1

    def to_dict(self) -> dict:
        return {"command": self.command, "params": dict(self.params), "output_dir": self.output_dir,
                "format_version": self.format_version, "jobs": self.jobs}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_jsonable)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if d.get("command") not in PARAMS:
            raise ConfigError(f"command: unknown command {d.get('command')!r}")
        params = resolve_params(d["command"], d.get("params", {}))
        return cls(d["command"], params, str(d.get("output_dir", default_output_dir())),
                   int(d.get("format_version", FORMAT_VERSION)), int(d.get("jobs", 1)))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


SCHEMAS = {
    "validate.json": "validate.schema.json",
    "spectrum.json": "spectrum.schema.json",
    "linear_decay.json": "linear_decay.schema.json",
    "evolve_sim.json": "evolve_sim.schema.json",
    "tuning.json": "tuning.schema.json",
    "blowup_report.json": "blowup_report.schema.json",
    "fit.json": "fit.schema.json",
}


def schema_path(report_name: str) -> Path:
    """Published JSON schema for a report file written by the CLI."""
    return Path(__file__).parent / "schemas" / SCHEMAS[report_name]


def default_output_dir() -> str:
    return os.environ.get(ENV_OUTPUT, DEFAULT_OUTPUT)


def _coerce(name, typ, value):
    try:
        if typ is bool:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes", "on"):
                return True
            if str(value).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected {typ.__name__}, got {value!r}") from None


def resolve_params(command: str, *layers: dict) -> dict:
    table = PARAMS[command]
    out = {k: spec[1] for k, spec in table.items()}
    for layer in layers:
        for k, v in (layer or {}).items():
            if k not in table:
                raise ConfigError(f"{k}: unknown parameter for {command}")
            if v is None:
                continue
            out[k] = _coerce(k, table[k][0], v)
    for k, (typ, _, check, _) in table.items():
        if check is not None and not check(out[k]):
            raise ConfigError(f"{k}: value {out[k]!r} rejected")
    if command in ("linear-decay", "tune-T") and out["window_hi"] - out["window_lo"] < 2:
        raise ConfigError("window_hi: fit window must be at least 2 long")
    if command == "spectrum" and (out["re_max"] <= out["re_min"] or out["im_max"] <= out["im_min"]):
        raise ConfigError("re_max/im_max: empty rectangle")
    if out.get("data") == "csv" and not out.get("data_csv"):
        raise ConfigError("data_csv: required when data = csv")
    return out


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"not serializable: {type(o)}")


def _clean(x):
    """Replace non-finite floats (not valid JSON) by None, recursively."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else None
    return x


# ---------------------------------------------------------------------------
# output helpers

class Output:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.output_dir)
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output_dir: cannot create {self.dir}: {e}") from None
        if not os.access(self.dir, os.W_OK):
            raise ConfigError(f"output_dir: {self.dir} is not writable")
        self.files = []

    def csv(self, name: str, header, rows) -> Path:
        p = self.dir / name
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.files.append(p.name)
        return p

    def report(self, name: str, results: dict, status: str = "ok") -> Path:
        doc = {
            "format_version": FORMAT_VERSION,
            "version": __version__,
            "command": self.cfg.command,
            "config": self.cfg.to_dict(),
            "status": status,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "files": sorted(self.files),
            "results": results,
        }
        p = self.dir / name
        p.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _fit_dict(fit):
    if fit is None:
        return None
    return {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
            "slope_stderr": fit.slope_stderr, "window": [float(w) for w in fit.window]}


# ---------------------------------------------------------------------------
# commands

def cmd_validate(cfg: RunConfig, out: Output) -> int:
    from .profiles import identity_suite, psiT_fd_order
    p = cfg.params
    rows = identity_suite(p["n"], p["n_oracle"])
    out.csv("identity_suite.csv", ["identity", "grid_size", "max_abs_error", "passed"],
            [(n, g, e, e <= p["tol"]) for n, g, e in rows])
    order = psiT_fd_order()
    ok = all(e <= p["tol"] for _, _, e in rows)
    out.report("validate.json", {
        "identities": [{"identity": n, "grid_size": g, "max_abs_error": e, "passed": e <= p["tol"]}
                       for n, g, e in rows],
        "fd_residual_order": order, "all_passed": ok})
    if not ok:
        raise Breakdown("identity suite above tolerance")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Output) -> int:
    from . import modestab as ms
    p = cfg.params
    res = ms.spectrum_scan((p["re_min"], p["re_max"]), (p["im_min"], p["im_max"]),
                           (p["n_re"], p["n_im"]), p["n_boundary"], p["rho_m"], p["M"],
                           p["delta"], p["rtol"], jobs=cfg.jobs)
    if p["heatmap_re"] > 0 and p["heatmap_im"] > 0:
        re = np.linspace(p["re_min"], p["re_max"], p["heatmap_re"])
        im = np.linspace(p["im_min"], p["im_max"], p["heatmap_im"])
        Z = (re[:, None] + 1j * im[None, :]).ravel()
        Z = ms._detour(Z)
        vals, _, _ = ms.connection_values(Z, p["rho_m"], p["M"], p["delta"], p["rtol"])
        out.csv("connection_heatmap.csv", ["re", "im", "abs_connection", "arg_connection"],
                [(z.real, z.imag, abs(v), float(np.angle(v))) for z, v in zip(Z, vals)])
    eig = [{"re": r.lam.real, "im": r.lam.imag, "multiplicity_count": r.multiplicity_count,
            "residual": r.residual, "connection_abs": r.connection_abs} for r in res.eigenvalues]
    status = "ok" if not res.inconclusive else "inconclusive"
    out.report("spectrum.json", {
        "eigenvalues": eig,
        "spectral_bound": res.spectral_bound,
        "inconclusive": [{"rect": [c.re0, c.re1, c.im0, c.im1], "reason": why} for c, why in res.inconclusive],
        "cells": len(res.cells)}, status)
    if res.inconclusive:
        raise Inconclusive(f"{len(res.inconclusive)} cell(s) inconclusive")
    return EXIT_OK


def cmd_linear_decay(cfg: RunConfig, out: Output) -> int:
    from . import linear as L
    from .grid import SimGrid
    p = cfg.params
    N = p["N"]
    if p["init"] == "g":
        U = SimGrid(N).symmetry_mode()[:, None]
    else:
        U = L.random_state(N, p["seed"], project=p["project"] and p["with_potential"], batch=p["n_seeds"])
    tr = L.linear_evolve(U, p["tau_max"], p["dtau"] or None, p["with_potential"], p["record_every"])
    tot = tr.norm_total / tr.norm_total[0]
    stab = tr.norm_stable / np.where(tr.norm_stable[0] > 0, tr.norm_stable[0], 1.0)
    sup_t, sup_s = tot.max(axis=1), stab.max(axis=1)
    out.csv("linear_trace.csv", ["tau", "norm_total", "norm_stable"], zip(tr.tau, sup_t, sup_s))
    w = (p["window_lo"], min(p["window_hi"], p["tau_max"]))
    fits = w[1] - w[0] >= 2  # a horizon shorter than the window leaves nothing to fit
    res = {"N": N, "dtau": tr.dtau, "normalization": "sup over initial states of norm(tau)/norm(0)",
           "fit_window": list(w) if fits else None,
           "fit_total": _fit_dict(L.fit_rate(tr.tau, sup_t, w)) if fits else None,
           "fit_stable": _fit_dict(L.fit_rate(tr.tau, sup_s, w))
           if fits and np.all(sup_s[tr.tau >= w[0]] > 0) else None,
           "per_state_stable_slopes": [L.fit_rate(tr.tau, stab[:, j], w).slope for j in range(stab.shape[1])]
           if fits and np.all(stab > 0) else None}
    if not p["with_potential"]:
        res["free_bound_max_ratio"] = float(np.max(tot / np.exp(-1.5 * tr.tau)[:, None]))
    out.report("linear_decay.json", res)
    return EXIT_OK


def _perturbation(p):
    from .evolution import Perturbation
    d = p["data"]
    if d == "zero":
        return Perturbation.zero()
    if d == "bump":
        return Perturbation.bump(p["amplitude"])
    if d == "psiT0":
        return Perturbation.psiT0(p["T0"])
    if d == "random":
        return Perturbation.random(p["amplitude"], p["seed"])
    try:
        return Perturbation.from_csv(p["data_csv"])
    except (OSError, ValueError) as e:
        raise ConfigError(f"data_csv: {e}") from None


def _evo_cfg(p):
    from .evolution import EvolutionConfig
    return EvolutionConfig(p["N"], p["dtau"] or None, p["tau_max"], p["filter"], p["record_every"])


def cmd_evolve_sim(cfg: RunConfig, out: Output) -> int:
    from . import evolution as E
    p = cfg.params
    ec = _evo_cfg(p)
    u0 = E.initial_data_U(_perturbation(p), p["T"], p["N"])
    tr = E.evolve(u0, ec)
    out.csv("evolve_trace.csv", ["tau", "norm_total", "unstable_amplitude"], tr.rows())
    res = {"blowup": tr.blowup, "blowup_tau": tr.blowup_tau, "dtau": tr.dtau, "filter": tr.filter,
           "final_tau": float(tr.tau[-1]), "final_norm": float(tr.norm[-1]),
           "final_unstable_amplitude": float(tr.amplitude[-1])}
    amp = np.abs(tr.amplitude)
    if len(tr.tau) > 8 and np.all(amp[1:] > 0) and tr.tau[-1] - tr.tau[0] >= 3:
        from .linear import fit_rate
        res["amplitude_fit"] = _fit_dict(fit_rate(tr.tau, amp, (tr.tau[0] + 1, tr.tau[-1])))
    out.report("evolve_sim.json", res, "blowup" if tr.blowup else "ok")
    return EXIT_OK


def cmd_tune_T(cfg: RunConfig, out: Output) -> int:
    from . import evolution as E
    p = cfg.params
    r = E.tune_blowup_time(_perturbation(p), _evo_cfg(p), p["tau_probe"], p["xtol"],
                           decay_window=(p["window_lo"], p["window_hi"]))
    out.csv("tune_iterations.csv", ["T", "unstable_amplitude"], r.unstable_amplitude_trace)
    if r.decay_trace is not None:
        out.csv("tune_trace.csv", ["tau", "norm_total", "unstable_amplitude"], r.decay_trace.rows())
    out.report("tuning.json", r.summary())
    return EXIT_OK


def cmd_evolve_phys(cfg: RunConfig, out: Output) -> int:
    from . import lightcone as LC
    p = cfg.params
    if p["data"] == "psiT":
        f, g = LC.self_similar_data(p["T0"], p["amplitude"], p["center"], p["width"])
    elif p["data"] == "bump":
        f, g = LC.bump_data(p["amplitude"], p["center"], p["width"])
    else:
        f, g = LC.bump_data(0.0)
    pc = LC.PhysConfig(n=p["n"], cfl=p["cfl"], t_max=p["t_max"], record_every=p["record_every"])
    run = LC.evolve_physical(f, g, pc)
    every = max(1, int(round(p["snapshot_every"] / p["record_every"])))
    snaps = run.states[::every]
    if run.states[-1] is not snaps[-1]:
        snaps.append(run.states[-1])
    k = p["snapshot_stride"]
    out.csv("phys_snapshots.csv", ["t", "r", "psi", "psi_t"],
            ((s.t, r, a, b) for s in snaps for r, a, b in zip(s.r[::k], s.psi[::k], s.psi_t[::k])))
    out.csv("phys_trace.csv", ["t", "sup_psi", "sup_psi_t", "energy"],
            ((s.t, np.max(np.abs(s.psi)), np.max(np.abs(s.psi_t)), LC.energy(s)) for s in run.states))
    res = {"breakdown": run.breakdown, "breakdown_t": run.breakdown_t, "reason": run.reason,
           "final_t": run.states[-1].t}
    status = "ok"
    try:
        bf = LC.detect_blowup(run.states)
        rep = LC.convergence_report(run.states, bf.T_fit, p["refine_T"], bf.T_stderr)
        res["blowup"] = True
        res["report"] = rep.summary()
        res["detection_window"] = list(bf.window)
    except LC.DetectionError as e:
        res["blowup"] = False
        res["detection"] = str(e)
    if run.reason == "non-finite values":
        status = "breakdown"
    out.report("blowup_report.json", res, status)
    if status == "breakdown":
        raise Breakdown(f"non-finite values at t = {run.breakdown_t}")
    return EXIT_OK


def cmd_fit_rate(cfg: RunConfig, out: Output) -> int:
    from .linear import fit_rate
    p = cfg.params
    try:
        with open(p["input"], newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = np.array([float(r[p["x"]]) for r in rows])
        y = np.array([float(r[p["y"]]) for r in rows])
    except OSError as e:
        raise ConfigError(f"input: {e}") from None
    except KeyError as e:
        raise ConfigError(f"x/y: column {e} not in {p['input']}") from None
    lo = max(p["window_lo"], x.min())
    hi = min(p["window_hi"], x.max())
    fit = fit_rate(x, y, (lo, hi))
    out.report("fit.json", {"fit": _fit_dict(fit), "n_points": int(len(x))})
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "linear-decay": cmd_linear_decay,
    "evolve-sim": cmd_evolve_sim,
    "tune-T": cmd_tune_T,
    "evolve-phys": cmd_evolve_phys,
    "fit-rate": cmd_fit_rate,
}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ymblowup", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, table in PARAMS.items():
        sp = sub.add_parser(name, help=f"run {name}")
        sp.add_argument("--config", help="JSON config file (params object or full RunConfig)")
        sp.add_argument("--output-dir", help=f"output directory (default ${ENV_OUTPUT} or {DEFAULT_OUTPUT})")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any parameter")
        sp.add_argument("-v", "--verbose", action="store_true")
        for k, (typ, default, _, hlp) in table.items():
            flag = "--" + k.replace("_", "-")
            kind = str if typ is bool else typ
            sp.add_argument(flag, dest=f"p_{k}", type=kind, default=None,
                            help=f"{hlp} (default {default})".strip())
    return ap


def config_from_args(args) -> RunConfig:
    file_params, base = {}, {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"config: {e}") from None
        if "command" in base and base["command"] != args.command:
            raise ConfigError(f"command: config file is for {base['command']!r}")
        file_params = base.get("params", base if "command" not in base else {})
        file_params = {k: v for k, v in file_params.items()
                       if k not in ("output_dir", "jobs", "format_version", "command")}
    flags = {k[2:]: v for k, v in vars(args).items() if k.startswith("p_")}
    sets = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set: expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        sets[k.strip()] = v.strip()
    params = resolve_params(args.command, file_params, flags, sets)
    outdir = args.output_dir or base.get("output_dir") or default_output_dir()
    jobs = args.jobs if args.jobs is not None else int(base.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("jobs: must be at least 1")
    return RunConfig(args.command, params, str(outdir), FORMAT_VERSION, jobs)


def run(cfg: RunConfig) -> int:
    """Execute a resolved config and map failures to exit codes."""
    from .evolution import DivergenceError, OutOfRegimeError
    from .grid import ResolutionError
    from .lightcone import ConfigError as PhysConfigError, DetectionError
    from .linear import FitError, StepSizeError
    from .modestab import InconclusiveContourError, IntegrationError, RefinementError
    try:
        out = Output(cfg)
        return COMMANDS[cfg.command](cfg, out)
    except (Inconclusive, InconclusiveContourError, RefinementError, OutOfRegimeError, DetectionError) as e:
        log.error("inconclusive: %s", e)
        return EXIT_INCONCLUSIVE
    except (Breakdown, DivergenceError, StepSizeError, IntegrationError, FloatingPointError, FitError) as e:
        log.error("numerical breakdown in %s: %s", cfg.command, e)
        return EXIT_NUMERIC
    except (ConfigError, PhysConfigError, ResolutionError, ValueError) as e:
        # module preconditions (ranges, domains, resolutions) surface as ValueError
        log.error("config error: %s", e)
        return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print(f"ymblowup: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    code = run(cfg)
    if code == EXIT_OK:
        print(f"ymblowup {cfg.command}: wrote {cfg.output_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())

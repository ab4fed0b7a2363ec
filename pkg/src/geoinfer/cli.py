"""Command-line front end.

    geoinfer <command> --config run.json [--seed N] [--out DIR] [--workers N] [--samples N]

Commands: dist, medial, covering, boundary, curvature, stability, holder.
The config is a JSON object holding a ``shape`` description (see
:mod:`geoinfer.io`) and the command's parameters; flags override it. Every
run writes ``<command>.json`` (plus CSV tables) into ``--out``; the report
echoes the resolved config, seed and tool version, and carries no
timestamps, so reruns are byte-identical.

Exit codes: 0 success, 1 runtime or model error, 2 input error.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .curvature import RegionBins, steiner_fit
from .distance import gradient
from .errors import InputError
from .io import read_points, shape_from_config, write_csv
from .measures import Offset, boundary_measure
from .medial import covering_scaling_experiment, sample_mu_medial, source_box
from .sampling import sample_uniform
from .shapes import Box
from .stability import check_critical_stability, holder_experiment, jitter, stability_report, transport_bound

COMMON = {"command", "shape", "seed", "samples", "workers", "out"}

# command -> {key: default}; None marks a required key
PARAMS = {
    "dist": {"queries": "", "queries_file": "", "s_tie": "", "samples": 0},
    "medial": {"mu": None, "eps": None, "margin": "", "samples": 100_000},
    "covering": {"mu": None, "eps": None, "etas": None, "max_rays": 1_000_000, "tol": 0.05, "samples": 20_000},
    "boundary": {"region": None, "sampler": "random", "samples": 100_000},
    "curvature": {"regions": "whole", "r_grid": "", "sampler": "sobol", "samples": 1_000_000},
    "stability": {
        "shape2": "",
        "jitter": "",
        "L": None,
        "R": "",
        "region": None,
        "mu": "",
        "n_rays": 200_000,
        "samples": 200_000,
    },
    "holder": {"region": None, "deltas": None, "trials": 4, "samples": 100_000},
}

# keys never echoed into reports: where results go and how fast they are made
_NOT_ECHOED = {"out", "workers"}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if hasattr(x, "__dataclass_fields__"):
        return _plain({k: getattr(x, k) for k in x.__dataclass_fields__})
    return x


def resolve_config(command, raw, flags):
    if not isinstance(raw, dict):
        raise InputError("config must be a JSON object")
    allowed = COMMON | set(PARAMS[command])
    unknown = set(raw) - allowed
    if unknown:
        raise InputError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    if raw.get("command", command) != command:
        raise InputError(f"config is for command {raw['command']!r}, not {command!r}")
    cfg = {k: v for k, v in PARAMS[command].items() if v != ""}
    cfg.update({"seed": 0, "workers": os.cpu_count() or 1, "out": "."})
    cfg.update({k: v for k, v in raw.items() if k != "command"})
    for key in ("seed", "out", "workers", "samples"):
        value = getattr(flags, key)
        if value is not None:
            cfg[key] = value
    missing = [k for k, v in cfg.items() if v is None]
    if "shape" not in cfg:
        missing.append("shape")
    if missing:
        raise InputError(f"missing config keys for {command}: {', '.join(sorted(missing))}")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise InputError("seed must be an integer in [0, 2^64)")
    for key in ("samples", "workers"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < (0 if key == "samples" else 1):
            raise InputError(f"{key} must be a positive integer")
    cfg["command"] = command
    return cfg


def _region(spec, dim):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise InputError("region must be {'box': {'lo': .., 'hi': ..}} or {'offset': r}")
    (kind, value), = spec.items()
    if kind == "offset":
        return Offset(float(value))
    if kind == "box":
        if not isinstance(value, dict) or set(value) != {"lo", "hi"}:
            raise InputError("box region needs exactly 'lo' and 'hi'")
        box = Box(value["lo"], value["hi"])
        if box.dim != dim:
            raise InputError("region and shape differ in dimension")
        return box
    raise InputError(f"unknown region kind {kind!r}")


def _box_region(spec, dim):
    E = _region(spec, dim)
    if not isinstance(E, Box):
        raise InputError("this command needs a box region")
    return E


# ---------------------------------------------------------------- commands


def cmd_dist(cfg, K, base):
    if "queries" in cfg and "queries_file" in cfg:
        raise InputError("give at most one of 'queries' and 'queries_file'")
    if "queries_file" in cfg:
        Q = read_points(os.path.join(base, cfg["queries_file"]))
    elif "queries" in cfg:
        Q = np.asarray(cfg["queries"], dtype=float).reshape(-1, K.dim)
    elif cfg["samples"] > 0:
        Q = sample_uniform(source_box(K, 0.0), cfg["samples"], cfg["seed"])
    else:
        raise InputError("no queries: give 'queries', 'queries_file' or --samples")
    if Q.shape[1] != K.dim:
        raise InputError(f"queries have dimension {Q.shape[1]}, shape has {K.dim}")
    s_tie = cfg.get("s_tie")
    dist = K.distance(Q)
    mu = np.array([gradient(K, q, s_tie).mu if d > 0 else math.nan for q, d in zip(Q, dist)])
    header = [f"x{i + 1}" for i in range(K.dim)] + ["dist", "mu"]
    tables = {"dist.csv": (header, [(*q, d, m) for q, d, m in zip(Q, dist, mu)])}
    return {"n_queries": len(Q)}, tables


def cmd_medial(cfg, K, base):
    S = sample_mu_medial(K, cfg["mu"], cfg["eps"], cfg["samples"], cfg["seed"], margin=cfg.get("margin"), workers=cfg["workers"])
    header = [f"m{i + 1}" for i in range(K.dim)] + ["dist", "mu", "n_witnesses"]
    rows = [(*m, d, u, len(w)) for m, d, u, w in zip(S.points, S.dist, S.mu, S.witnesses)]
    lo, hi = (S.points.min(axis=0), S.points.max(axis=0)) if len(S) else (None, None)
    return {"n_points": len(S), "stats": S.stats, "extent_lo": lo, "extent_hi": hi}, {"medial.csv": (header, rows)}


def cmd_covering(cfg, K, base):
    T = covering_scaling_experiment(
        K, cfg["mu"], cfg["eps"], cfg["etas"], cfg["seed"], n_rays=cfg["samples"], max_rays=cfg["max_rays"], tol=cfg["tol"], workers=cfg["workers"]
    )
    result = {
        "slope": T.slope,
        "intercept": T.intercept,
        "n_rays": T.n_rays,
        "n_samples": T.n_samples,
        "flagged": T.flagged,
        "table": [{"eta": e, "count": c, "count_half_budget": h, "stabilized": s} for e, c, h, s in T.rows()],
    }
    rows = [(e, c, h, str(s).lower()) for e, c, h, s in T.rows()]
    return result, {"covering.csv": (["eta", "count", "count_half_budget", "stabilized"], rows)}


def cmd_boundary(cfg, K, base):
    E = _region(cfg["region"], K.dim)
    m = boundary_measure(K, E, cfg["samples"], cfg["seed"], sampler=cfg["sampler"], workers=cfg["workers"])
    header = [f"x{i + 1}" for i in range(K.dim)] + ["mass"]
    return {"total": m.total, "n_atoms": len(m)}, {"boundary.csv": (header, [(*a, w) for a, w in zip(m.atoms, m.masses)])}


def cmd_curvature(cfg, K, base):
    if cfg["regions"] not in ("whole", "per_point", "box_strata"):
        raise InputError("regions must be 'whole', 'per_point' or 'box_strata'")
    fit = steiner_fit(
        K, RegionBins(cfg["regions"]), cfg.get("r_grid"), cfg["samples"], cfg["seed"], sampler=cfg["sampler"], workers=cfg["workers"]
    )
    header = ["region"] + [f"c{i}" for i in range(K.dim + 1)]
    return fit.to_dict(), {"curvature.csv": (header, [(name, *c) for name, c in zip(fit.regions, fit.coeffs)])}


def cmd_stability(cfg, K, base):
    if ("shape2" in cfg) == ("jitter" in cfg):
        raise InputError("give exactly one of 'shape2' and 'jitter'")
    K2 = shape_from_config(cfg["shape2"], base) if "shape2" in cfg else jitter(K, float(cfg["jitter"]), cfg["seed"], 1)
    E = _box_region(cfg["region"], K.dim)
    rep = stability_report(K, K2, cfg["L"], E, cfg["samples"], cfg["seed"], R=cfg.get("R"), n_rays=cfg["n_rays"], workers=cfg["workers"])
    result = {"report": rep}
    tb = transport_bound(K, K2, E, cfg["samples"], cfg["seed"], workers=cfg["workers"])
    result["transport"] = {"w1": tb.w1, "w1_stderr": tb.w1_stderr, "l1": tb.l1, "holds": tb.holds}
    if "mu" in cfg:
        S = sample_mu_medial(K, cfg["mu"], 0.0, cfg["n_rays"], cfg["seed"], workers=cfg["workers"])
        crit = check_critical_stability(K, K2, S, n_rays=cfg["n_rays"], seed=cfg["seed"] + 1, workers=cfg["workers"])
        result["critical"] = crit
    return result, {}


def cmd_holder(cfg, K, base):
    E = _box_region(cfg["region"], K.dim)
    h = holder_experiment(K, E, cfg["deltas"], cfg["trials"], cfg["seed"], n=cfg["samples"], workers=cfg["workers"])
    return h.to_dict(), {"holder.csv": (["delta", "hausdorff", "l1", "l1_stderr"], h.rows())}


COMMANDS = {
    "dist": cmd_dist,
    "medial": cmd_medial,
    "covering": cmd_covering,
    "boundary": cmd_boundary,
    "curvature": cmd_curvature,
    "stability": cmd_stability,
    "holder": cmd_holder,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="geoinfer", description="Geometric inference experiments.")
    parser.add_argument("--version", action="version", version=f"geoinfer {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--workers", type=int, metavar="N")
        p.add_argument("--samples", type=int, metavar="N")
    return parser


def run(argv):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {args.config}: line {exc.lineno}: {exc.msg}") from None
    cfg = resolve_config(args.command, raw, args)
    base = os.path.dirname(os.path.abspath(args.config))
    K = shape_from_config(cfg["shape"], base)
    result, tables = COMMANDS[args.command](cfg, K, base)
    os.makedirs(cfg["out"], exist_ok=True)
    report = {
        "tool": "geoinfer",
        "version": __version__,
        "command": args.command,
        "seed": cfg["seed"],
        "config": {k: v for k, v in cfg.items() if k not in _NOT_ECHOED},
        "result": result,
    }
    with open(os.path.join(cfg["out"], f"{args.command}.json"), "w", newline="\n") as fh:
        fh.write(json.dumps(_plain(report), sort_keys=True, indent=2) + "\n")
    for name, (header, rows) in tables.items():
        write_csv(os.path.join(cfg["out"], name), header, rows)
    return 0


def main(argv=None):
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line interface.

Subcommands
-----------
check     validity certificate of a model specification
grid      covariance values on a regular 2D lattice (CSV)
fit       composite-likelihood or variogram least-squares fit (JSON)
krige     simple kriging predictions (CSV)
cv        split-sample validation (JSON)
simulate  Gaussian realization on a lattice or at given points (CSV)

``check`` exits 0 when the model is certified, 2 when the condition
fails and 3 when it could not be decided.  Other commands exit 1 on bad
input and 2 on numerical failure.  CSV outputs get a sidecar
``<output>.config.json`` holding the resolved configuration; JSON outputs
embed it under ``"config"``.
"""

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import __version__
from .errors import ConvergenceError, FactorizationError, HolecovError, InvalidModelError
from .field import DataError, detrend_polynomial, empirical_variogram, load_csv
from .inference import ParameterVector, fit
from .kriging import save_predictions_csv, simple_krige, simulate_gaussian, split_sample_validate
from .modelspec import ModelSpecError, as_json, build_model, load_spec, model_to_spec, placeholders, template
from .transforms import Status, certify, ensure_valid, evaluate, normalized

log = logging.getLogger("holecov")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_UNCHECKED = 0, 1, 2, 3
_CHECK_EXIT = {Status.PROVED: 0, Status.NUMERIC: 0, Status.FAILED: 2, Status.UNCHECKED: 3}


class InputError(HolecovError, ValueError):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}, line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _resolve_path(path, base):
    return path if os.path.isabs(path) or base is None else os.path.join(base, path)


def _load_config(args):
    cfg = _read_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise InputError(f"{args.config}: configuration must be a JSON object")
    base = os.path.dirname(os.path.abspath(args.config)) if args.config else None
    if getattr(args, "spec", None):
        cfg["model"] = args.spec
        base = None
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    if isinstance(cfg.get("model"), str):
        cfg["model"] = load_spec(_resolve_path(cfg["model"], base))
    for key in ("data", "queries", "points"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _resolve_path(cfg[key], base)
    return cfg


def _require(cfg, key):
    if key not in cfg:
        raise InputError(f"configuration is missing '{key}'")
    return cfg[key]


def _load_data(cfg):
    cols = cfg.get("columns", {})
    data = load_csv(_require(cfg, "data"), cols.get("x", "x"), cols.get("y", "y"), cols.get("value", "value"))
    if "detrend" in cfg:
        dt = cfg["detrend"]
        data = detrend_polynomial(data, int(dt.get("coordinate", 1)), int(dt.get("degree", 1)))
    return data


def _lattice(grid):
    try:
        x0, x1, y0, y1 = map(float, grid["extent"])
        nx, ny = map(int, grid["resolution"])
    except (KeyError, TypeError, ValueError):
        raise InputError("grid needs 'extent' [x0, x1, y0, y1] and 'resolution' [nx, ny]") from None
    if nx < 2 or ny < 2:
        raise InputError("grid resolution must be at least 2 per axis")
    xs, ys = np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _read_points(path):
    pts = []
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                try:
                    pts.append((float(row["x"]), float(row["y"])))
                except (KeyError, TypeError, ValueError):
                    raise InputError(f"{path}, line {reader.line_num}: expected numeric x, y") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if not pts:
        raise InputError(f"{path}: no points")
    return np.array(pts)


def _write_sidecar(output, cfg):
    if output:
        with open(output + ".config.json", "w") as fh:
            fh.write(as_json(cfg))


def _emit_json(output, payload):
    text = as_json(payload)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# -- subcommands ---------------------------------------------------------------


def cmd_check(args):
    cfg = _load_config(args)
    model = build_model(_require(cfg, "model"))
    d = args.dim or model.dim
    cert = certify(model, d)
    lines = [f"kind: {model.kind}", f"status: {cert.status.value}", f"reason: {cert.reason}"]
    if cert.relation:
        lines.append(f"condition: {cert.relation}")
    if cert.lhs is not None:
        lines.append(f"lhs = {cert.lhs:.12g}, rhs = {cert.rhs:.12g}")
    for name, fam in _families(model):
        t = fam.traits(d) if hasattr(fam, "traits") else None
        if t is not None:
            lines.append(
                f"{name} {fam!r}: valid={t.valid} twice_differentiable={t.twice_differentiable_at_origin} "
                f"spectral_density={t.has_spectral_density} nonincreasing={t.spectral_density_nonincreasing}"
            )
    text = "\n".join(lines)
    print(text)
    if args.output:
        _emit_json(args.output, {"certificate": cert.to_dict(), "config": cfg})
    return _CHECK_EXIT[cert.status]


def _families(model, prefix=""):
    out = []
    for name in ("phi", "phi1", "phi2", "base"):
        f = getattr(model, name, None)
        if f is None:
            continue
        if hasattr(f, "traits"):
            out.append((prefix + name, f))
        elif hasattr(f, "kind"):
            out.extend(_families(f, prefix + name + "."))
    return out


def cmd_grid(args):
    cfg = _load_config(args)
    grid = cfg.setdefault("grid", {})
    if args.extent:
        grid["extent"] = args.extent
    if args.resolution:
        grid["resolution"] = args.resolution
    grid.setdefault("extent", [-10, 10, -10, 10])
    grid.setdefault("resolution", [201, 201])
    if args.normalize:
        cfg["normalize"] = True
    if args.override:
        cfg["override"] = True
    model = ensure_valid(build_model(_require(cfg, "model")), override=bool(cfg.get("override")))
    if cfg.get("normalize"):
        model = normalized(model)
    pts = _lattice(grid)
    vals = evaluate(model, pts)
    out = open(args.output, "w", newline="") if args.output else nullcontext(sys.stdout)
    with out as fh:
        w = csv.writer(fh)
        w.writerow(["h1", "h2", "C"])
        for (x, y), v in zip(pts, vals):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
    _write_sidecar(args.output, cfg)
    return EXIT_OK


def _parameter_vector(cfg, names):
    init = _require(cfg, "init")
    bounds = cfg.get("bounds", {})
    missing = [n for n in names if n not in init]
    if missing:
        raise InputError(f"init is missing {missing}")
    lo = [float(bounds.get(n, [0.0, None])[0]) for n in names]
    hi = [bounds.get(n, [0.0, None])[1] for n in names]
    hi = [float("inf") if h is None else float(h) for h in hi]
    try:
        return ParameterVector(tuple(names), tuple(float(init[n]) for n in names), tuple(lo), tuple(hi))
    except HolecovError as exc:
        raise InputError(str(exc)) from None


def cmd_fit(args):
    cfg = _load_config(args)
    spec = _require(cfg, "model")
    names = placeholders(spec)
    if not names:
        raise InputError("model template has no '$name' placeholders to fit")
    init = _parameter_vector(cfg, names)
    data = _load_data(cfg)
    kind = str(cfg.get("objective", "CL")).upper()
    budget = int(cfg.get("budget", 2000))
    if kind == "CL":
        target = data
    elif kind == "WLS":
        vcfg = cfg.get("variogram", {})
        dirs = vcfg.get("directions", [[1, 0], [0, 1]])
        target = [empirical_variogram(data, dv, np.radians(float(vcfg.get("angle_tol_deg", 22.5))),
                                      float(vcfg.get("lag_width", 1.0)), vcfg.get("max_lag"))
                  for dv in dirs]
    else:
        raise InputError(f"unknown objective {kind!r}")
    result = fit(kind, template(spec), target, init, budget=budget,
                 max_pair_distance=cfg.get("radius"), seed=int(cfg["seed"]))
    payload = result.to_dict()
    payload["model"] = model_to_spec(result.model) if result.model is not None else None
    payload["config"] = cfg
    degenerate = data.n <= len(names) + 1
    if degenerate:
        payload["warning"] = f"{data.n} observations for {len(names)} parameters: estimate is degenerate"
    _emit_json(args.output, payload)
    if degenerate or not result.converged:
        print(f"fit did not converge: {payload.get('warning', result.message)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_krige(args):
    cfg = _load_config(args)
    model = build_model(_require(cfg, "model"))
    data = _load_data(cfg)
    if "queries" in cfg:
        q = _read_points(cfg["queries"])
    else:
        q = _lattice(_require(cfg, "grid"))
    res = simple_krige(model, data, q, override=bool(cfg.get("override")))
    if args.output:
        save_predictions_csv(args.output, q, res)
        _write_sidecar(args.output, cfg)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["x", "y", "prediction", "variance"])
        for (x, y), p, v in zip(q, res.predictions, res.variances):
            w.writerow([x, y, p, v])
    return EXIT_OK


def cmd_cv(args):
    cfg = _load_config(args)
    model = build_model(_require(cfg, "model"))
    data = _load_data(cfg)
    if "holdout" in cfg:
        holdout = np.asarray(cfg["holdout"], dtype=int)
    else:
        frac = float(cfg.get("holdout_fraction", 0.1))
        k = int(round(frac * data.n))
        rng = np.random.Generator(np.random.Philox(key=int(cfg["seed"])))
        holdout = np.sort(rng.choice(data.n, size=k, replace=False))
        cfg["holdout"] = holdout.tolist()
    if holdout.size == 0:
        raise InputError("holdout set is empty")
    rep = split_sample_validate(model, data, holdout, override=bool(cfg.get("override")))
    payload = rep.to_dict()
    payload["config"] = cfg
    _emit_json(args.output, payload)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _load_config(args)
    model = build_model(_require(cfg, "model"))
    pts = _read_points(cfg["points"]) if "points" in cfg else _lattice(_require(cfg, "grid"))
    z = simulate_gaussian(model, pts, int(cfg["seed"]), override=bool(cfg.get("override")))
    out = open(args.output, "w", newline="") if args.output else nullcontext(sys.stdout)
    with out as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for (x, y), v in zip(pts, z):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
    _write_sidecar(args.output, cfg)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="random seed (overrides the configuration)")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, help="limit BLAS threads")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="holecov", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="certify a model specification")
    s.add_argument("spec", nargs="?", help="model specification JSON")
    s.add_argument("--dim", type=int, help="space dimension (default: the model's)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("grid", parents=[common], help="evaluate C(h) on a lattice")
    s.add_argument("spec", nargs="?", help="model specification JSON")
    s.add_argument("--extent", type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"))
    s.add_argument("--resolution", type=int, nargs=2, metavar=("NX", "NY"))
    s.add_argument("--normalize", action="store_true", help="divide by C(0)")
    s.add_argument("--override", action="store_true", help="allow uncertified models")
    s.set_defaults(func=cmd_grid)

    for name, func, text in (("fit", cmd_fit, "fit a model template"),
                             ("krige", cmd_krige, "simple kriging"),
                             ("cv", cmd_cv, "split-sample validation"),
                             ("simulate", cmd_simulate, "simulate a Gaussian field")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.set_defaults(func=func, spec=None)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "check" and args.command != "grid" and not args.config:
        parser.error(f"{args.command} requires --config")
    if args.command in ("check", "grid") and not (args.spec or args.config):
        parser.error(f"{args.command} requires a specification or --config")
    limit = nullcontext()
    if args.threads:
        from threadpoolctl import threadpool_limits
        limit = threadpool_limits(args.threads)
    try:
        with limit:
            return args.func(args)
    except (InputError, ModelSpecError, DataError, InvalidModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, FactorizationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HolecovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

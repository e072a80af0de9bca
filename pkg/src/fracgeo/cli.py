"""Command line interface: ``fracgeo <command> ...``.

Commands print JSON to stdout; with ``--out DIR`` they also write
``report.json`` and the CSV plot data (``refinement.csv``, ``margins.csv``)
there.  Exit status: 0 when every verdict holds, 1 on any
violated-within-uncertainty verdict, 2 on input or parse errors.

Settings come from ``--config FILE`` (``key = value`` lines with keys n, s,
p, m, L, quad_nodes, policy, epsilon, t_per_decade, seed, threads) and
are overridden by explicit flags.
"""

import argparse
import configparser
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .dsl import SpecError, SpecParseError, read_spec, sample_spec
from .grid import GridFormatError, GridSizeError, lp_norm, read_grid, write_grid
from .params import ParameterError, validate_params
from .projbody import affine_energy, pi_body, write_projection_body
from .rearrange import rearrange
from .seminorm import KernelPolicy, frac_seminorm
from .sphere import sphere_quadrature
from .starbody import BodyFormatError, parse_body_arg
from . import suite as suite_mod
from . import verify as vf

CONFIG_KEYS = {
    "n": int, "s": float, "p": float, "m": int, "L": float, "quad_nodes": int,
    "policy": str, "epsilon": float, "t_per_decade": int, "seed": int, "threads": int,
}
DEFAULTS = {"n": 1, "s": 0.25, "p": 2.0, "m": 400, "L": 2.0, "quad_nodes": 256,
            "policy": "exact", "epsilon": None, "t_per_decade": 64, "seed": 0, "threads": 1}

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def read_config(path):
    """``key = value`` lines (``#`` comments) into a typed dict."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case sensitive (L vs l)
    try:
        parser.read_string("[config]\n" + Path(path).read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise InputError(f"config {path}: {exc}") from exc
    out = {}
    for key, raw in parser["config"].items():
        if key not in CONFIG_KEYS:
            raise InputError(f"config {path}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](raw)
        except ValueError as exc:
            raise InputError(f"config {path}: bad value for {key}: {raw!r}") from exc
    return out


def settings(args):
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def policy_of(cfg):
    name = cfg["policy"]
    if name in ("exact", "exclude_diagonal"):
        return KernelPolicy.exact()
    if name == "truncate":
        if not cfg["epsilon"]:
            raise InputError("policy truncate needs epsilon")
        return KernelPolicy.truncate(cfg["epsilon"])
    raise InputError(f"unknown policy {name!r}")


def body_arg(arg, n):
    try:
        return parse_body_arg(arg, n)
    except (ValueError, IndexError) as exc:
        raise InputError(f"body {arg!r}: {exc}") from exc


def load_function(cfg, spec=None, grid=None, required=True):
    if spec and grid:
        raise InputError("give either a spec file or a grid file, not both")
    if spec:
        return sample_spec(read_spec(spec), cfg["n"], cfg["L"], cfg["m"])
    if grid:
        f = read_grid(grid)
        if f.n != cfg["n"]:
            raise InputError(f"grid {grid} has n={f.n}, expected {cfg['n']}")
        return f
    if required:
        raise InputError("an input function is required (--spec or --grid)")
    return None


def load_pair(cfg, args):
    f = load_function(cfg, args.spec, args.grid)
    h = load_function(cfg, args.h_spec, args.h_grid, required=False)
    return f, (h if h is not None else f)


def emit(args, payload, reports=()):
    text = json.dumps(payload, indent=2)
    print(text)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n", encoding="utf-8")
        if reports:
            vf.write_refinement_csv(out / "refinement.csv", reports)
            vf.write_margin_csv(out / "margins.csv", reports)


def exit_status(reports):
    return EXIT_VIOLATION if any(r.violated and not r.soft for r in reports) else EXIT_OK


# ---------------------------------------------------------------- commands

def cmd_rearrange(args):
    cfg = settings(args)
    f = load_function(cfg, args.spec, args.grid)
    fs = rearrange(f)
    if args.output:
        write_grid(args.output, fs)
    emit(args, {
        "input": {"L": f.L, "m": f.m, "norms": {str(p): lp_norm(f, p) for p in (1, 2, 3)}},
        "rearranged": {"L": fs.L, "m": fs.m, "norms": {str(p): lp_norm(fs, p) for p in (1, 2, 3)},
                       "max": float(np.max(fs.values))},
        "output": args.output,
    })
    return EXIT_OK


def cmd_seminorm(args):
    cfg = settings(args)
    params = validate_params(cfg["n"], cfg["s"], cfg["p"])
    f, h = load_pair(cfg, args)
    K = body_arg(args.K, cfg["n"])
    policy = policy_of(cfg)
    if args.diagnose:
        policy = KernelPolicy(policy.mode, policy.epsilon, True)
    res = frac_seminorm(f, h, K, params, args.mode, policy)
    payload = {
        "params": {"n": params.n, "s": params.s, "p": params.p},
        "grid": {"L": f.L, "m": f.m},
        "mode": args.mode,
        "policy": policy.describe(),
        "value": vf._num(res.value),
        "infinite": res.infinite,
        "divergent": res.divergent,
    }
    if res.diagnostic is not None:
        d = res.diagnostic
        payload["diagnostic"] = {"epsilons": list(d.epsilons),
                                 "values": [vf._num(v) for v in d.values],
                                 "exponent": vf._num(d.exponent), "divergent": d.divergent}
    emit(args, payload)
    return EXIT_OK


def cmd_projbody(args):
    cfg = settings(args)
    params = validate_params(cfg["n"], cfg["s"], cfg["p"], need_projection_range=True)
    f, h = load_pair(cfg, args)
    quad = sphere_quadrature(cfg["n"], cfg["quad_nodes"])
    policy = policy_of(cfg)
    eps = policy.epsilon if policy.mode == "truncate" else None
    K = body_arg(args.K, cfg["n"]) if eps else None
    body = pi_body(f, h, params, args.mode, quad, eps, K, per_decade=cfg["t_per_decade"])
    if args.output:
        write_projection_body(args.output, body)
    emit(args, {
        "params": {"n": params.n, "s": params.s, "p": params.p},
        "grid": {"L": f.L, "m": f.m},
        "mode": args.mode,
        "nodes": len(quad),
        "degenerate": body.degenerate,
        "volume": vf._num(body.volume()),
        "affine_energy": vf._num(affine_energy(body)),
        "gauge_ps": {"min": vf._num(np.min(body.gauge_ps)), "max": vf._num(np.max(body.gauge_ps))},
        "output": args.output,
    })
    return EXIT_OK


def cmd_dualmix(args):
    cfg = settings(args)
    if args.alpha in (0, cfg["n"]):
        raise InputError(f"alpha must differ from 0 and n={cfg['n']}")
    quad = sphere_quadrature(cfg["n"], cfg["quad_nodes"])
    K = body_arg(args.K, cfg["n"])
    L = body_arg(args.L, cfg["n"])
    rep = vf.verify_dual_mixed(K, L, args.alpha, quad)
    emit(args, rep.to_dict(), [rep])
    return exit_status([rep])


def cmd_verify(args):
    cfg = settings(args)
    kind = args.check
    n = cfg["n"]
    quad = sphere_quadrature(n, cfg["quad_nodes"])
    policy = policy_of(cfg)
    if kind == "riesz":
        f = load_function(cfg, args.spec, args.grid)
        k = load_function(cfg, args.k_spec, args.k_grid)
        g = load_function(cfg, args.g_spec, args.g_grid)
        rep = vf.verify_riesz(f, k, g)
    elif kind == "limit":
        f = load_function(cfg, args.spec, args.grid)
        K = body_arg(args.K, n)
        s_list = [float(v) for v in args.s_list.split(",")]
        rep = vf.verify_limit_s1(f, K, cfg["p"], s_list, quad)
    else:
        f, h = load_pair(cfg, args)
        if kind == "aniso":
            params = validate_params(n, cfg["s"], cfg["p"])
            K = body_arg(args.K, n)
            modes = tuple(args.modes.split(","))
            rep = vf.verify_anisotropic(f, h, K, params, modes, policy, equality=args.equality)
        else:
            params = validate_params(n, cfg["s"], cfg["p"], need_projection_range=True)
            if kind == "sym":
                rep = vf.verify_chain_symmetric(f, h, params, quad, policy)
            elif kind == "asym":
                rep = vf.verify_chain_asymmetric(f, h, params, quad, policy)
            elif kind == "volume":
                rep = vf.verify_volume_monotonicity(f, h, params, quad, args.mode)
            else:
                rep = vf.verify_invariance(f, h, params, quad, args.mode)
    if args.case:
        rep.case = args.case
    emit(args, rep.to_dict(), [rep])
    return exit_status([rep])


def cmd_suite(args):
    cfg = settings(args)
    if args.list:
        for c in suite_mod.CASES:
            print(c.name + ("  (slow)" if c.slow else ""))
        return EXIT_OK
    knobs = {k: cfg[k] for k in ("quad_nodes", "seed")}
    if args.config and "m" in read_config(args.config):
        knobs["m"] = cfg["m"]  # 2D resolution; the 1D and 3D cases keep theirs
    st = suite_mod.Settings.from_config(knobs)
    names = args.cases.split(",") if args.cases else None
    if names:
        unknown = set(names) - {c.name for c in suite_mod.CASES}
        if unknown:
            raise InputError(f"unknown cases: {', '.join(sorted(unknown))}")
    results = suite_mod.run_suite(names, st, cfg["threads"], args.include_slow)
    reports = [r for reps in results.values() for r in reps]
    failures, soft = suite_mod.summarize(results)
    payload = {
        "cases": {name: [r.to_dict() for r in reps] for name, reps in results.items()},
        "violations": failures,
        "warnings": soft,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        vf.write_refinement_csv(out / "refinement.csv", reports)
        vf.write_margin_csv(out / "margins.csv", reports)
    summary = {"reports": len(reports), "violations": failures, "warnings": soft}
    print(json.dumps(summary if args.out else payload, indent=2))
    return exit_status(reports)


# ---------------------------------------------------------------- parser

def _common(p, functions=True, second=True):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--n", type=int, help="dimension (1, 2 or 3)")
    p.add_argument("--s", type=float, help="fractional order in (0, 1)")
    p.add_argument("--p", type=float, help="integrability exponent")
    p.add_argument("--quad-nodes", dest="quad_nodes", type=int, help="sphere nodes (n >= 2)")
    p.add_argument("--policy", help="exact or truncate")
    p.add_argument("--epsilon", type=float, help="truncation radius (gauge units)")
    p.add_argument("--t-per-decade", dest="t_per_decade", type=int, help="t nodes per decade")
    p.add_argument("--seed", type=int, help="seed for random batteries")
    p.add_argument("--threads", type=int, help="worker processes for the suite")
    p.add_argument("--out", help="directory for report.json and CSV plot data")
    if functions:
        p.add_argument("--m", type=int, help="cells per axis")
        p.add_argument("--L", type=float, help="half-width of the sampling box")
        p.add_argument("--spec", help="function spec file for f")
        p.add_argument("--grid", help="grid file for f")
    if second:
        p.add_argument("--h-spec", dest="h_spec", help="function spec file for h (default f)")
        p.add_argument("--h-grid", dest="h_grid", help="grid file for h")


def build_parser():
    parser = argparse.ArgumentParser(prog="fracgeo",
                                     description="Fractional seminorms, projection bodies "
                                                 "and rearrangement checks on grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rearrange", help="symmetric decreasing rearrangement of a function")
    _common(p, second=False)
    p.add_argument("--output", help="write the rearranged grid here")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("seminorm", help="fractional seminorm of a pair")
    _common(p)
    p.add_argument("--K", default="ball:1", help="kernel body (ball:r, ellipsoid:..., file)")
    p.add_argument("--mode", default="abs", choices=("abs", "plus", "minus"))
    p.add_argument("--diagnose", action="store_true", help="run the divergence diagnostic")
    p.set_defaults(func=cmd_seminorm)

    p = sub.add_parser("projbody", help="polar projection body of a pair")
    _common(p)
    p.add_argument("--mode", default="abs", choices=("abs", "plus", "minus"))
    p.add_argument("--K", default="ball:1", help="body fixing the truncation gauge")
    p.add_argument("--output", help="write the body (FRACGEO-BODY v1) here")
    p.set_defaults(func=cmd_projbody)

    p = sub.add_parser("dualmix", help="dual mixed volume of two bodies")
    _common(p, functions=False, second=False)
    p.add_argument("--K", required=True, help="first body")
    p.add_argument("--L", required=True, help="second body")
    p.add_argument("--alpha", type=float, required=True, help="order, not 0 or n")
    p.set_defaults(func=cmd_dualmix)

    p = sub.add_parser("verify", help="one verification report")
    p.add_argument("check", choices=("sym", "asym", "aniso", "volume", "limit",
                                     "invariance", "riesz"))
    _common(p)
    p.add_argument("--K", default="ball:1", help="body for aniso and limit")
    p.add_argument("--mode", default="abs", choices=("abs", "plus", "minus"))
    p.add_argument("--modes", default="abs,plus", help="comma separated modes for aniso")
    p.add_argument("--equality", action="store_true", help="aniso: demand equality")
    p.add_argument("--s-list", dest="s_list", default="0.9,0.95,0.99", help="s values for limit")
    p.add_argument("--k-spec", dest="k_spec", help="riesz: kernel function spec")
    p.add_argument("--k-grid", dest="k_grid", help="riesz: kernel grid file")
    p.add_argument("--g-spec", dest="g_spec", help="riesz: third function spec")
    p.add_argument("--g-grid", dest="g_grid", help="riesz: third grid file")
    p.add_argument("--case", help="case id in the report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("suite", help="run the canonical battery")
    _common(p, functions=False, second=False)
    p.add_argument("--cases", help="comma separated case names (default: all but slow)")
    p.add_argument("--include-slow", action="store_true")
    p.add_argument("--list", action="store_true", help="list case names and exit")
    p.set_defaults(func=cmd_suite)
    return parser


INPUT_ERRORS = (InputError, SpecParseError, SpecError, GridFormatError, GridSizeError,
                BodyFormatError, ParameterError, OSError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"fracgeo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run_cli(args):
    return main(args)


if __name__ == "__main__":
    sys.exit(main())

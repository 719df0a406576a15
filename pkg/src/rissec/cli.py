"""Command line driver: ``python -m rissec <subcommand>``.

Exit status 0 on success, 1 when an evaluation failed, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import sys

from rissec import channels as ch
from rissec import experiment as ex
from rissec import metrics as mt
from rissec import montecarlo as mc_mod
from rissec.meijerg import ConvergenceError, MeijerGSpec, MeijerGSpecError, meijer_g


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(s) for s in text.replace(",", " ").split())


def _apply_sets(flat: dict, sets: list[str]) -> dict:
    for item in sets or []:
        if "=" not in item:
            raise ex.ConfigError("--set", f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        flat[k.strip()] = ex._parse_value(v)
    return flat


def _emit(text: str, path: str):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_experiment(exp: ex.Experiment, workers) -> int:
    rows = ex.run(exp, workers)
    _emit(ex.write_rows(rows, exp.params["output.format"]), exp.params["output.path"])
    failed = [r for r in rows if r.get("error")]
    for r in failed:
        print(f"evaluation failed at {r['sweep_var']}={r['sweep_value']} "
              f"{r['metric']}/{r['method']}: {r['error']}", file=sys.stderr)
    return 1 if failed else 0


def cmd_run(args) -> int:
    flat = _apply_sets(ex.load_config(args.config), args.set)
    return _run_experiment(ex.build_experiment(flat), args.workers)


def cmd_preset(args) -> int:
    if args.name not in ex.PRESETS:
        raise ex.ConfigError("preset", f"unknown preset {args.name!r}; valid: {sorted(ex.PRESETS)}")
    flat = _apply_sets(dict(ex.PRESETS[args.name]), args.set)
    exp = ex.build_experiment(flat)
    if args.emit_config:
        _emit(ex.emit_config(exp), args.out or "")
        return 0
    if args.out:
        exp.params["output.path"] = args.out
    return _run_experiment(exp, args.workers)


def cmd_validate(args) -> int:
    """Quadrature against Monte Carlo at every point of a config."""
    flat = _apply_sets(ex.load_config(args.config), args.set)
    exp = ex.build_experiment(flat)
    mcfg = exp.mc_config()
    bad = 0
    print("sweep_var,sweep_value,curve,metric,quadrature,mc_mean,mc_lo,mc_hi,agree")
    for ci, v, params in ex._points(exp):
        system = ex.build_system(params)
        est = mc_mod.estimate_metrics(system, mcfg, ("sop", "asc"), args.workers)
        for metric, fn in (("sop", mt.sop_quadrature), ("asc", mt.asc_quadrature)):
            q = fn(system).value
            e = est[metric]
            ok = e.ci95_lo <= q <= e.ci95_hi
            bad += not ok
            print(f"{exp.sweep_var},{v!r},{ci},{metric},{q!r},{e.mean!r},{e.ci95_lo!r},{e.ci95_hi!r},"
                  f"{'yes' if ok else 'no'}")
    print(f"# {bad} disagreement(s) outside the MC 95% interval", file=sys.stderr)
    return 0


def cmd_gfun(args) -> int:
    spec = MeijerGSpec(args.m, args.n, _floats(args.a), _floats(args.b))
    rep = meijer_g(spec, args.z, method=args.method, epsilon=args.epsilon)
    print(f"spec = {spec}")
    print(f"z = {args.z!r}")
    print(f"value = {rep.value!r}")
    print(f"abs_err_estimate = {rep.abs_err_estimate!r}")
    print(f"method = {rep.method}")
    print(f"perturbation_applied = {str(rep.perturbation_applied).lower()}")
    return 0


def cmd_moments(args) -> int:
    cfg = ch.RfCascadeConfig(ch.RicianHop(args.k1, args.omega1), ch.RicianHop(args.k2, args.omega2),
                             args.n, 1, 1.0)
    mom = ch.rician_product_moments(cfg)
    print(f"mean = {mom.mean!r}")
    print(f"variance = {mom.variance!r}")
    print(f"a = {mom.a!r}")
    print(f"b = {mom.b!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rissec", description="Secrecy metrics for RIS-assisted RF/FSO relaying.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp_.add_argument("--workers", type=int, default=None,
                         help=f"worker threads (default: ${mc_mod.WORKERS_ENV} or CPU count)")

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    common(r)
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="run or print a figure preset")
    pr.add_argument("name")
    pr.add_argument("--emit-config", action="store_true", help="print the preset as a config file")
    pr.add_argument("--out", default=None, help="output path (default stdout)")
    common(pr)
    pr.set_defaults(func=cmd_preset)

    v = sub.add_parser("validate", help="compare quadrature with Monte Carlo at every point")
    v.add_argument("config")
    common(v)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gfun", help="evaluate one Meijer G-function")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--a", default="", help="upper parameters, comma/space separated")
    g.add_argument("--b", default="", help="lower parameters, comma/space separated")
    g.add_argument("--z", type=float, required=True)
    g.add_argument("--method", choices=("slater", "mellin_barnes"), default=None)
    g.add_argument("--epsilon", type=float, default=1e-5)
    g.set_defaults(func=cmd_gfun)

    m = sub.add_parser("moments", help="cascaded Rician product moments")
    m.add_argument("--k1", type=float, default=2.0)
    m.add_argument("--k2", type=float, default=2.0)
    m.add_argument("--omega1", type=float, default=1.0)
    m.add_argument("--omega2", type=float, default=1.0)
    m.add_argument("--n", type=int, default=2, help="RIS elements N")
    m.set_defaults(func=cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ex.ConfigError, MeijerGSpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, mt.QuadratureError, ArithmeticError, RuntimeError) as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``robustmc list | describe | run | sweep``."""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments as ex
from .core import InitializationError, InvariantViolation, ReplicateError
from .hmc import TrajectoryDivergence
from .proximal import ProxConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
RUNTIME_ERRORS = (InvariantViolation, TrajectoryDivergence, ProxConvergenceError, FloatingPointError)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(spec, pairs):
    for pair in pairs or []:
        if "=" not in pair:
            raise ex.SpecError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        spec = ex.set_path(spec, key, _parse_value(value))
    return spec


def _resolve(args):
    spec = _overrides(ex.load_spec(args.experiment), args.set)
    if args.seed is not None:
        spec.root_seed = args.seed
    scale = "desk"
    if getattr(args, "paper_scale", False):
        spec = ex.apply_paper_scale(spec)
        scale = "paper"
    ex.validate(spec)
    out = args.out or ex.default_output_root() / spec.name
    return spec, out, scale


def cmd_list(args):
    for name, desc in ex.list_experiments():
        print(f"{name:36s} {desc}")


def cmd_describe(args):
    print(ex.load_spec(args.experiment).to_json())


def cmd_run(args):
    spec, out, scale = _resolve(args)
    if args.dry_run:
        print(f"{spec.name}: ok")
        return
    manifest = ex.run_experiment(spec, out, args.workers, scale)
    print(f"wrote {len(manifest['files'])} files to {out}")


def cmd_sweep(args):
    spec, out, _ = _resolve(args)
    param = args.param
    preset = spec.options.get("sweep") or {}
    if args.values is not None:
        values = [_parse_value(v) for v in args.values.split(",")]
        param = param or preset.get("param")
    else:
        if param is not None and param != preset.get("param"):
            raise ex.SpecError("--values is required for this parameter")
        param, values = preset.get("param"), preset.get("values")
    if not param or not values:
        raise ex.SpecError(f"{spec.name} has no preset sweep; pass --param and --values")
    rows = ex.sweep(spec, param, values, out, args.workers)
    print("value,mean_acceptance,final_mse,n_replicates")
    for r in rows:
        print(",".join(str(c) for c in r))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robustmc", description="Run robust MCMC benchmark experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list registered experiments").set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="print an experiment spec as JSON")
    d.add_argument("experiment")
    d.set_defaults(func=cmd_describe)

    def common(p):
        p.add_argument("experiment", help="registry name, spec JSON or manifest.json")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a spec field (dotted path)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"output directory (default ${ex.OUTPUT_ENV}/<name>)")
        p.add_argument("--workers", type=int, default=1)

    r = sub.add_parser("run", help="run one experiment")
    common(r)
    r.add_argument("--paper-scale", action="store_true", help="use the full-size budgets")
    r.add_argument("--dry-run", action="store_true", help="validate the experiment config only")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run an experiment over several parameter values")
    common(s)
    s.add_argument("--param", help="dotted spec path, e.g. sampler.params.h")
    s.add_argument("--values", help="comma-separated values")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ex.SpecError as exc:
        print(f"robustmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InitializationError, ValueError) as exc:
        print(f"robustmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReplicateError as exc:
        print(f"robustmc: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc.cause, InitializationError) else EXIT_RUNTIME
    except RUNTIME_ERRORS as exc:
        print(f"robustmc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``rbfquad <subcommand> [options]``.

Every subcommand writes a JSON metadata line first (``# {...}`` in CSV,
``{"meta": {...}}`` in JSON lines), then rows in grid order. Output is
byte-identical across reruns of the same configuration; wall-clock times are
only written with ``--timing``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from .experiments import ConfigError, ExperimentConfig, metadata, run_experiment
from .kernels import parse_kernel
from .lsquad import algorithm1, sequence
from .pointsets import min_distance, parse_pointset
from .polybasis import build_dops, dop_gram
from .quadrature import interpolatory_weights, stability_report
from .rbfsystem import ShapePolicy, make_space

__all__ = ["main", "read_config", "format_rows"]

# subcommand -> (experiment kind, defaults that differ from ExperimentConfig)
SWEEPS = {
    "stability-sweep": ("stability_sweep", {}),
    "error-sweep": ("error_sweep", {"kernel": "wendland:2,1", "dim": 2, "points": "halton:400", "degrees": "0,1"}),
    "convergence": ("convergence", {"kernel": "phs:3;phs:5", "dim": 2, "degrees": "1",
                                    "integrand": "genz:oscillatory:0", "eps": "1"}),
    "lsrbf-compare": ("lsrbf_compare", {"kernel": "gaussian", "dim": 2, "eps": "0.8", "degrees": "0",
                                        "sequence": "random", "seed": 1}),
    "ratio-study": ("ratio_study", {"kernel": "gaussian", "dim": 2, "eps": "0.8", "degrees": "0"}),
    "coverage": ("coverage", {"dim": 2, "n_values": "4,16,64", "eps": "breakpoints"}),
    "moments": ("moments_dump", {"points": "equid:11", "eps": "1"}),
}

# flag name -> config key
FLAG_KEYS = ["kernel", "dim", "points", "eps", "shape_policy", "degrees", "integrand", "trials", "n_values",
             "m_values", "sequence", "noise", "samples", "nmax", "method"]


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def format_rows(rows: list, meta: dict, fmt: str, footer: dict | None = None) -> str:
    buf = io.StringIO()
    if fmt == "jsonl":
        buf.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for r in rows:
            buf.write(json.dumps({k: _jsonable(v) for k, v in r.items()}) + "\n")
        if footer is not None:
            buf.write(json.dumps({k: _jsonable(v) for k, v in footer.items()}) + "\n")
        return buf.getvalue()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    if footer is not None:
        buf.write("# " + json.dumps({k: _jsonable(v) for k, v in footer.items()}, sort_keys=True) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent cells")
    p.add_argument("--seed", type=int, help="base seed for every random draw")
    p.add_argument("--timing", action="store_true", help="add runtime_ms columns (breaks byte-identity)")


def _add_sweep_flags(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    for key in FLAG_KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbfquad", description="RBF quadrature weights, stability and studies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="interpolatory weights with a stability footer")
    _add_common(p)
    p.add_argument("--kernel", default="phs:1")
    p.add_argument("--points", default="equid:11")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--eps", default="1", help="value, or 'invh' / '<c>*invh' for multiples of 1/h_min")
    p.add_argument("--degree", type=int, default=-1)
    p.add_argument("--shape-policy", default="constant", choices=("constant", "equal_moment_boundary"))
    p.add_argument("--dump-gram", metavar="PATH", help="write the DOP Gram matrix on the points as CSV")

    p = sub.add_parser("lsrbf", help="positive least-squares rule: grow the data set until no weight is negative")
    _add_common(p)
    p.add_argument("--centers", default="halton:20", help="point-set spec of the M centres")
    p.add_argument("--data-seq", default="halton", help="'halton' or 'random:<seed>'")
    p.add_argument("--kernel", default="gaussian")
    p.add_argument("--eps", type=float, default=0.8)
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--nmax", type=int, default=100_000)
    p.add_argument("--geometric", action="store_true")

    for name, (kind, _) in SWEEPS.items():
        p = sub.add_parser(name, help=f"{kind.replace('_', ' ')} study")
        _add_common(p)
        _add_sweep_flags(p)
        if name in ("ratio-study", "lsrbf-compare"):
            p.add_argument("--geometric", action="store_true")
    return parser


def _sweep_config(args) -> ExperimentConfig:
    kind, defaults = SWEEPS[args.command]
    mapping = {"experiment": kind, **defaults}
    if args.config:
        mapping.update(read_config(args.config))
        mapping["experiment"] = kind
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        mapping[k.strip()] = v.strip()
    for key in FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = val
    if args.seed is not None:
        mapping["seed"] = args.seed
    if getattr(args, "geometric", False):
        mapping["geometric"] = True
    return ExperimentConfig.from_mapping(mapping)


def _cmd_weights(args):
    dim = args.dim
    cfg = ExperimentConfig.from_mapping({"experiment": "stability_sweep", "kernel": args.kernel, "dim": dim,
                                         "points": args.points, "eps": args.eps, "degrees": str(args.degree),
                                         "shape_policy": args.shape_policy})
    ps = parse_pointset(args.points, cfg.domain)
    tok = args.eps.strip()
    if tok.endswith("invh"):
        c = tok[: -len("invh")].rstrip("*")
        eps = (float(c) if c else 1.0) / min_distance(ps)
    else:
        eps = float(tok)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        space = make_space(parse_kernel(args.kernel), ps, ShapePolicy(args.shape_policy, eps), args.degree)
    rule = interpolatory_weights(space)
    rows = []
    for i, (x, w) in enumerate(zip(ps.points, rule.weights)):
        row = {"index": i, "x": float(x[0])}
        if dim == 2:
            row["y"] = float(x[1])
        row["weight"] = float(w)
        rows.append(row)
    footer = stability_report(rule).as_dict()
    meta = metadata(cfg) | {"experiment": "weights", "space": space.describe()}
    _emit(format_rows(rows, meta, args.format, footer), args.out)
    if args.dump_gram:
        G = dop_gram(ps, build_dops(ps, max(args.degree, 0)))
        np.savetxt(args.dump_gram, G, delimiter=",", fmt="%.17g")


def _cmd_lsrbf(args):
    cfg = ExperimentConfig.from_mapping({"experiment": "ratio_study", "kernel": args.kernel, "dim": args.dim,
                                         "points": args.centers, "eps": str(args.eps), "degrees": str(args.degree),
                                         "nmax": args.nmax, "seed": args.seed or 0})
    dom = cfg.domain
    kind, _, seed = args.data_seq.partition(":")
    if kind not in ("halton", "random") or (kind == "random" and not seed):
        raise ConfigError("--data-seq must be 'halton' or 'random:<seed>'")
    seq = sequence(kind, dom, int(seed or 0))
    centers = parse_pointset(args.centers, dom)
    space = make_space(parse_kernel(args.kernel), centers, args.eps, args.degree)
    trace = []
    res = algorithm1(space, seq, domain=dom, N_max=args.nmax, geometric=args.geometric, on_iteration=trace.append)
    meta = metadata(cfg) | {"experiment": "lsrbf", "space": space.describe(), "data_seq": args.data_seq}
    trace_text = format_rows(trace, meta, "jsonl")
    rule = res.rule if res.success else res.best
    rows = []
    if rule is not None:
        for i, (x, w) in enumerate(zip(rule.points.points, rule.weights)):
            rows.append({"index": i, **{c: float(v) for c, v in zip("xy", x)}, "weight": float(w)})
    footer = {"success": res.success, "reason": res.reason, "N_start": res.N_start, "N_final": res.N_final}
    if rule is not None:
        footer.update(stability_report(rule).as_dict())
    rule_text = format_rows(rows, meta, args.format, footer)
    if args.out:
        _emit(rule_text, args.out)
        _emit(trace_text, args.out + ".trace.jsonl")
    else:
        sys.stdout.write(trace_text + rule_text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "weights":
            _cmd_weights(args)
        elif args.command == "lsrbf":
            _cmd_lsrbf(args)
        else:
            cfg = _sweep_config(args)
            rows = run_experiment(cfg, jobs=max(1, args.jobs), timing=args.timing)
            _emit(format_rows(rows, metadata(cfg), args.format), args.out)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"rbfquad: configuration error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"rbfquad: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

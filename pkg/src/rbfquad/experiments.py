"""Batch studies: configuration, sweep cells and deterministic result tables."""
from __future__ import annotations

import hashlib
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .geometry import breakpoints, monte_carlo_uncovered, uncovered_area_equidistant
from .genz import add_noise, parse_integrand, random_genz, reference_integral
from .kernels import parse_kernel
from .lsquad import algorithm1, fit_power_law, sequence
from .moments import kernel_moments, numeric_moment
from .pointsets import (
    RNG_NAME,
    Domain,
    equidistant,
    max_fill_distance,
    min_distance,
    parse_pointset,
    unit_interval,
    unit_square,
)
from .quadrature import estimate_lebesgue, interpolatory_weights, stability_report
from .rbfsystem import ShapePolicy, make_space

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "run_experiment",
    "run_stability_sweep",
    "run_error_sweep",
    "run_convergence",
    "run_lsrbf_compare",
    "run_ratio_study",
    "run_coverage",
    "run_moments_dump",
    "metadata",
]

ILL_CONDITIONED = 1e12


class ConfigError(ValueError):
    pass


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def eps_grid(spec: str) -> list:
    """``log:<lo>:<hi>:<per_decade>`` or a comma list; ``invh`` / ``<c>*invh`` scale by 1/h_min."""
    spec = str(spec).strip()
    if spec.startswith("log:"):
        lo, hi, per = spec[4:].split(":")
        lo, hi, per = float(lo), float(hi), int(per)
        n = int(round(np.log10(hi / lo) * per)) + 1
        return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), n)]
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if tok.endswith("invh"):
            c = tok[: -len("invh")].rstrip("*")
            out.append(("invh", float(c) if c else 1.0))
        elif tok:
            out.append(float(tok))
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat key-value description of one study. Every field has a default."""

    experiment: str = "stability_sweep"
    kernel: str = "wendland:1,1"
    dim: int = 1
    points: str = "equid:100"
    eps: str = "log:0.1:100:40"
    shape_policy: str = "constant"
    degrees: str = "-1,0,1,2"
    integrand: str = "genz:oscillatory"
    trials: int = 20
    seed: int = 0
    n_values: str = "100,200,400,800,1600"
    m_values: str = "10,20,40"
    sequence: str = "halton"
    noise: str = "0,1e-4,1e-2"
    samples: int = 10_000_000
    nmax: int = 100_000
    geometric: bool = False
    method: str = "auto"
    lebesgue: bool = False

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, val in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            typ = known[key].type
            try:
                if typ == "int":
                    kw[key] = int(val)
                elif typ == "bool":
                    kw[key] = val if isinstance(val, bool) else str(val).strip().lower() in ("1", "true", "yes", "on")
                else:
                    kw[key] = str(val).strip()
            except ValueError:
                raise ConfigError(f"bad value {val!r} for {key}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @property
    def domain(self) -> Domain:
        return unit_interval() if self.dim == 1 else unit_square()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.shape_policy not in ("constant", "equal_moment_boundary"):
            raise ConfigError(f"unknown shape policy {self.shape_policy!r}")
        try:
            for k in self.kernel.split(";"):
                parse_kernel(k)
            parse_pointset(self.points, self.domain)
            if not (self.experiment == "coverage" and self.eps == "breakpoints") and not eps_grid(self.eps):
                raise ConfigError("empty eps grid")
            for name in ("degrees", "n_values", "m_values"):
                if not _ints(getattr(self, name)):
                    raise ConfigError(f"empty grid for {name}")
            _floats(self.noise)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sequence not in ("halton", "random"):
            raise ConfigError("sequence must be halton or random")

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()[:16]


def metadata(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "config_sha256_16": cfg.digest(),
        "library": "rbfquad",
        "version": __version__,
        "numpy": np.__version__,
        "rng": RNG_NAME,
        "halton_bases": [2, 3],
    }


# ---------------------------------------------------------------- helpers


def _resolve_eps(token, h: float) -> float:
    if isinstance(token, tuple):
        return token[1] / h
    return token


def _rule_row(rule) -> dict:
    rep = stability_report(rule)
    return {
        "stability_measure": rep.stability_measure,
        "rule_of_one": rep.rule_of_one,
        "min_weight": rep.min_weight,
        "is_stable": rep.is_stable,
        "condition_estimate": rep.condition_estimate,
        "ill_conditioned": bool(not rep.condition_estimate <= ILL_CONDITIONED),
    }


def _failure(exc: Exception) -> dict:
    return {"status": f"error:{type(exc).__name__}", "message": str(exc)}


def _integrands(cfg: ExperimentConfig, q: int) -> list:
    """One integrand per trial: fixed if parameters are explicit, else drawn with seed + trial."""
    parts = cfg.integrand.split(":")
    if len(parts) == 2:
        return [random_genz(parts[1], q, cfg.seed + t) for t in range(cfg.trials)]
    g = parse_integrand(cfg.integrand, q)
    return [g] * cfg.trials


def _map(fn, cells, jobs: int):
    """Run cells in grid order; a worker pool may finish them in any order."""
    if jobs <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------- stability sweep


def _stability_cell(args):
    cfg, kernel_txt, d, eps_tok, timing = args
    t0 = time.perf_counter()
    ps = parse_pointset(cfg.points, cfg.domain)
    h = min_distance(ps)
    eps = _resolve_eps(eps_tok, h)
    row = {"kernel": kernel_txt, "points": cfg.points, "N": len(ps), "shape_policy": cfg.shape_policy,
           "degree": d, "eps": eps, "h_min": h, "eps_h": eps * h, "nonoverlap": bool(eps * h >= 1 - 1e-12)}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            space = make_space(parse_kernel(kernel_txt), ps, ShapePolicy(cfg.shape_policy, eps), d)
        rule = interpolatory_weights(space, strict=False)
        row.update(_rule_row(rule))
        row["status"] = "ok"
        if cfg.lebesgue:
            row["lebesgue_estimate"] = estimate_lebesgue(space)
    except Exception as exc:  # tagged row, sweep continues
        row.update(_failure(exc))
    if timing:
        row["runtime_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
    return [row]


def run_stability_sweep(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    """Stability report for every (kernel, degree, eps) cell."""
    cells = [
        (cfg, k.strip(), d, e, timing)
        for k in cfg.kernel.split(";")
        for d in _ints(cfg.degrees)
        for e in eps_grid(cfg.eps)
    ]
    return [r for rows in _map(_stability_cell, cells, jobs) for r in rows]


# ---------------------------------------------------------------- error sweep


def _error_cell(args):
    cfg, kernel_txt, d, eps_tok, timing = args
    t0 = time.perf_counter()
    ps = parse_pointset(cfg.points, cfg.domain)
    h = min_distance(ps)
    eps = _resolve_eps(eps_tok, h)
    base = {"row_type": "trial", "kernel": kernel_txt, "points": cfg.points, "N": len(ps), "degree": d,
            "eps": eps, "eps_h": eps * h}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            space = make_space(parse_kernel(kernel_txt), ps, ShapePolicy(cfg.shape_policy, eps), d)
        rule = interpolatory_weights(space, strict=False)
        stab = _rule_row(rule)
    except Exception as exc:
        return [dict(base, trial=t, **_failure(exc)) for t in range(cfg.trials)]
    rows = []
    for t, g in enumerate(_integrands(cfg, cfg.dim)):
        err = abs(rule(g) - reference_integral(g))
        rows.append(dict(base, trial=t, integrand=str(g), abs_error=err, **stab, status="ok"))
    if timing:
        ms = round((time.perf_counter() - t0) * 1e3, 3)
        for r in rows:
            r["runtime_ms"] = ms
    return rows


def aggregate_errors(rows: list) -> list:
    """Median/min error per (kernel, degree, eps) and the arg-min (by median) per (kernel, degree)."""
    groups = {}
    for r in rows:
        if r.get("status") != "ok":
            continue
        groups.setdefault((r["kernel"], r["degree"]), {}).setdefault(r["eps"], []).append(r)
    out = []
    for (kernel, d), by_eps in groups.items():
        aggs = []
        for eps, rs in by_eps.items():
            errs = np.array([r["abs_error"] for r in rs])
            first = rs[0]
            aggs.append({"row_type": "aggregate", "kernel": kernel, "points": first["points"], "N": first["N"],
                         "degree": d, "eps": eps, "eps_h": first["eps_h"], "trials": len(errs),
                         "median_error": float(np.median(errs)), "min_error": float(errs.min()),
                         "stability_measure": first["stability_measure"], "rule_of_one": first["rule_of_one"],
                         "min_weight": first["min_weight"], "is_stable": first["is_stable"],
                         "condition_estimate": first["condition_estimate"]})
        out.extend(aggs)
        best = min(aggs, key=lambda a: (a["median_error"], a["eps"]))
        out.append(dict(best, row_type="argmin"))
    return out


def run_error_sweep(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    cells = [
        (cfg, k.strip(), d, e, timing)
        for k in cfg.kernel.split(";")
        for d in _ints(cfg.degrees)
        for e in eps_grid(cfg.eps)
    ]
    rows = [r for rs in _map(_error_cell, cells, jobs) for r in rs]
    return rows + aggregate_errors(rows)


# ---------------------------------------------------------------- convergence


def _convergence_cell(args):
    cfg, kernel_txt, d, N, timing = args
    t0 = time.perf_counter()
    ps = parse_pointset(f"{cfg.sequence}:{N}" + (f":{cfg.seed}" if cfg.sequence == "random" else ""), cfg.domain)
    g = _integrands(cfg, cfg.dim)[0]
    row = {"row_type": "point", "kernel": kernel_txt, "degree": d, "N": N, "sequence": cfg.sequence,
           "h_max": max_fill_distance(ps), "integrand": str(g)}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eps = eps_grid(cfg.eps)[0]
            space = make_space(parse_kernel(kernel_txt), ps, eps if not isinstance(eps, tuple) else 1.0, d)
        rule = interpolatory_weights(space, strict=False)
        row.update(abs_error=abs(rule(g) - reference_integral(g)), **_rule_row(rule), status="ok")
    except Exception as exc:
        row.update(_failure(exc))
    if timing:
        row["runtime_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
    return [row]


def fitted_order(h, err) -> float:
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def run_convergence(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    """Errors along an N grid and the fitted order per (kernel, degree)."""
    kernels = [k.strip() for k in cfg.kernel.split(";")]
    cells = [(cfg, k, d, N, timing) for k in kernels for d in _ints(cfg.degrees) for N in _ints(cfg.n_values)]
    rows = [r for rs in _map(_convergence_cell, cells, jobs) for r in rs]
    fits = []
    for k in kernels:
        for d in _ints(cfg.degrees):
            ok = [r for r in rows if r["kernel"] == k and r["degree"] == d and r.get("status") == "ok"]
            ok = [r for r in ok if r["abs_error"] > 0]
            order = fitted_order([r["h_max"] for r in ok], [r["abs_error"] for r in ok]) if len(ok) >= 2 else float("nan")
            fits.append({"row_type": "fit", "kernel": k, "degree": d, "points_used": len(ok), "fitted_order": order})
    return rows + fits


# ---------------------------------------------------------------- least squares vs interpolatory


def _lsrbf_cell(args):
    cfg, kernel_txt, d, M, timing = args
    t0 = time.perf_counter()
    dom = cfg.domain
    seq = sequence(cfg.sequence, dom, cfg.seed)
    eps = eps_grid(cfg.eps)[0]
    kernel = parse_kernel(kernel_txt)
    base = {"kernel": kernel_txt, "eps": eps, "degree": d, "M": M, "sequence": cfg.sequence}
    try:
        space = make_space(kernel, seq(M), eps, d)
        res = algorithm1(space, seq, domain=dom, N_max=cfg.nmax, geometric=cfg.geometric)
        if not res.success:
            return [dict(base, row_type="trial", status=f"error:{res.reason}", message="no positive rule found")]
        N = res.N_final
        ls_rule = res.rule
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            interp = interpolatory_weights(make_space(kernel, seq(N), eps, d), strict=False)
    except Exception as exc:
        return [dict(base, row_type="trial", **_failure(exc))]
    rows = []
    gs = _integrands(cfg, dom.dim)
    for method, rule in (("lsrbf", ls_rule), ("interpolatory", interp)):
        stab = _rule_row(rule)
        for noise in _floats(cfg.noise):
            for t, g in enumerate(gs):
                ref = reference_integral(g)
                vals = add_noise(g(rule.points.points), noise, cfg.seed + 7919 * (t + 1))
                rows.append(dict(base, row_type="trial", method=method, N=N, noise=noise, trial=t,
                                 abs_error=abs(float(rule.weights @ vals) - ref), **stab, status="ok"))
    if timing:
        ms = round((time.perf_counter() - t0) * 1e3, 3)
        for r in rows:
            r["runtime_ms"] = ms
    return rows


def run_lsrbf_compare(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    """Same data points: positive least-squares rule vs interpolatory rule, with and without noise.

    Noise uses the same seed for both methods at a given trial, so each
    pair sees identically distributed perturbations.
    """
    kernels = [k.strip() for k in cfg.kernel.split(";")]
    degrees = _ints(cfg.degrees)
    cells = [(cfg, k, d, M, timing) for k in kernels for d in degrees for M in _ints(cfg.m_values)]
    rows = [r for rs in _map(_lsrbf_cell, cells, jobs) for r in rs]
    summary = []
    keys = []
    for r in rows:
        if r.get("status") == "ok":
            key = (r["kernel"], r["degree"], r["M"], r["noise"], r["method"])
            if key not in keys:
                keys.append(key)
    for key in keys:
        rs = [r for r in rows if r.get("status") == "ok" and (r["kernel"], r["degree"], r["M"], r["noise"], r["method"]) == key]
        errs = np.array([r["abs_error"] for r in rs])
        summary.append({"row_type": "aggregate", "kernel": key[0], "degree": key[1], "M": key[2], "noise": key[3],
                        "method": key[4], "N": rs[0]["N"], "trials": len(errs), "median_error": float(np.median(errs)),
                        "stability_measure": rs[0]["stability_measure"], "is_stable": rs[0]["is_stable"]})
    return rows + summary


# ---------------------------------------------------------------- ratio study


def _ratio_cell(args):
    cfg, M, timing = args
    t0 = time.perf_counter()
    dom = cfg.domain
    seq = sequence(cfg.sequence, dom, cfg.seed)
    eps = eps_grid(cfg.eps)[0]
    row = {"row_type": "point", "kernel": cfg.kernel, "eps": eps, "degree": _ints(cfg.degrees)[0], "M": M,
           "sequence": cfg.sequence, "seed": cfg.seed}
    try:
        space = make_space(parse_kernel(cfg.kernel), seq(M), eps, row["degree"])
        res = algorithm1(space, seq, domain=dom, N_max=cfg.nmax, geometric=cfg.geometric)
        row.update(N_final=res.N_final, N_start=res.N_start, iterations=len(res.iterations))
        if res.success:
            row.update(min_weight=res.rule.min_weight, rule_of_one=res.rule.rule_of_one,
                       residual=res.rule.residual, status="ok")
        else:
            row.update(status=f"error:{res.reason}")
    except Exception as exc:
        row.update(_failure(exc))
    if timing:
        row["runtime_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
    return [row]


def run_ratio_study(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    """Smallest positive-rule N per M, plus the fit ``N = C M^s``."""
    rows = [r for rs in _map(_ratio_cell, [(cfg, M, timing) for M in _ints(cfg.m_values)], jobs) for r in rs]
    ok = [r for r in rows if r.get("status") == "ok"]
    if len(ok) >= 2:
        C, s = fit_power_law([r["M"] for r in ok], [r["N_final"] for r in ok])
    else:
        C = s = float("nan")
    return rows + [{"row_type": "fit", "points_used": len(ok), "C": C, "s": s}]


# ---------------------------------------------------------------- coverage


def coverage_eps(N: int, spec: str) -> list:
    """``breakpoints`` expands to each breakpoint and +-20% around it."""
    if spec.strip() == "breakpoints":
        return [b * f for b in breakpoints(N) for f in (0.8, 1.0, 1.2)]
    return [float(v) for v in eps_grid(spec) if not isinstance(v, tuple)]


def _coverage_cell(args):
    cfg, N, eps, timing = args
    t0 = time.perf_counter()
    n = int(round(np.sqrt(N)))
    closed = uncovered_area_equidistant(N, eps)
    mc = monte_carlo_uncovered(equidistant(unit_square(), n), 1.0 / eps, cfg.samples, cfg.seed)
    row = {"N": N, "eps": eps, "closed_form": closed, "monte_carlo": mc.value, "stderr": mc.stderr,
           "samples": mc.samples, "within_3sigma": bool(abs(closed - mc.value) <= 3 * mc.stderr + 1e-15),
           "status": "ok"}
    if timing:
        row["runtime_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
    return [row]


def run_coverage(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    cells = [(cfg, N, e, timing) for N in _ints(cfg.n_values) for e in coverage_eps(N, cfg.eps)]
    return [r for rs in _map(_coverage_cell, cells, jobs) for r in rs]


# ---------------------------------------------------------------- moments


def run_moments_dump(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    """One row per centre: value, method tag and (for the adaptive method) its error estimate."""
    ps = parse_pointset(cfg.points, cfg.domain)
    kernel = parse_kernel(cfg.kernel)
    eps = _resolve_eps(eps_grid(cfg.eps)[0], min_distance(ps) if len(ps) > 1 else 1.0)
    if kernel.is_phs:
        eps = 1.0
    rows = []
    t0 = time.perf_counter()
    if cfg.method == "numeric":
        for i, c in enumerate(ps.points):
            val, err = numeric_moment(kernel, eps, c, cfg.domain, full_output=True)
            rows.append({"index": i, "center": [float(v) for v in c], "eps": eps, "value": val,
                         "method": "adaptive_numeric", "error_estimate": err})
    else:
        vals, tags = kernel_moments(kernel, eps, ps.points, cfg.domain)
        for i, (c, v, tag) in enumerate(zip(ps.points, vals, tags)):
            rows.append({"index": i, "center": [float(x) for x in c], "eps": eps, "value": float(v),
                         "method": tag, "error_estimate": None})
    if timing:
        ms = round((time.perf_counter() - t0) * 1e3, 3)
        for r in rows:
            r["runtime_ms"] = ms
    return rows


EXPERIMENTS = {
    "stability_sweep": run_stability_sweep,
    "error_sweep": run_error_sweep,
    "convergence": run_convergence,
    "lsrbf_compare": run_lsrbf_compare,
    "ratio_study": run_ratio_study,
    "coverage": run_coverage,
    "moments_dump": run_moments_dump,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> list:
    return EXPERIMENTS[cfg.experiment](cfg, jobs, timing)

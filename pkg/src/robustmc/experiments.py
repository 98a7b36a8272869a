"""Declarative experiment specs, the named registry and the runners behind the CLI."""
from __future__ import annotations

import copy
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as dg
from ._accel import backend
from ._kernels import laplace_langevin_chunk, zz_box_gaussian
from .core import ChainSpec, RngStream, run_replicates
from .gradient_samplers import barker, expected_jump, LangevinConfig, LangevinKernel, mala, malta, tamed_mala, ula
from .hmc import HmcConfig, HmcKernel, _leapfrog, kinetic_energy, rhmc_exact_gaussian
from .pdmp import PdmpConfig, SpeedFunction, simulate_bps, simulate_speedup_zz, simulate_zz
from .proximal import ProximalLangevinKernel, ThetaConfig, ThetaKernel, moreau_envelope
from .targets import (Cauchy, Gaussian, RegressionData, arcsine_boundary, box_gaussian, cauchy_regression_horseshoe,
                      coupled_quartic_2d, gaussian_2d, laplace_product, quartic, synthesize_regression)
from .transforms import (StereographicRWM, isotropic_transform, signlog_transform, transformed_kernel)

SCHEMA_VERSION = 1
OUTPUT_ENV = "ROBUSTMC_OUTPUT_ROOT"
# fields that --paper-scale may change; everything else is algorithmic
SIZE_FIELDS = {"n_iters", "n_replicates", "thin", "target.params.dim", "sampler.params.n_events",
               "sampler.params.max_evaluations", "options.checkpoints", "options.grid_samples"}


class SpecError(ValueError):
    """Invalid or unresolvable experiment spec (a usage error)."""


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    target: dict
    sampler: dict
    n_iters: int = 1000
    n_replicates: int = 1
    root_seed: int = 20240601
    thin: int = 1
    x0: object = None
    options: dict = field(default_factory=dict)
    paper_scale: dict = field(default_factory=dict)
    description: str = ""
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise SpecError(f"unsupported schema version {d.get('schema_version')}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    def copy(self) -> "ExperimentSpec":
        return ExperimentSpec.from_dict(copy.deepcopy(self.to_dict()))


def set_path(spec: ExperimentSpec, path: str, value) -> ExperimentSpec:
    d = spec.to_dict()
    node = d
    keys = path.split(".")
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {} if k not in node or node[k] is None else node[k]
            if not isinstance(node[k], dict):
                raise SpecError(f"cannot set {path}: {k} is not a mapping")
        node = node[k]
    node[keys[-1]] = value
    return ExperimentSpec.from_dict(d)


def get_path(spec: ExperimentSpec, path: str):
    node = spec.to_dict()
    for k in path.split("."):
        if not isinstance(node, dict) or k not in node:
            raise SpecError(f"unknown parameter path {path}")
        node = node[k]
    return node


def apply_paper_scale(spec: ExperimentSpec) -> ExperimentSpec:
    bad = set(spec.paper_scale) - SIZE_FIELDS
    if bad:
        raise SpecError(f"paper-scale overrides may only touch size fields, got {sorted(bad)}")
    out = spec
    for path, value in spec.paper_scale.items():
        out = set_path(out, path, value)
    return out


# ------------------------------------------------------------------ builders

def _horseshoe(p=5, n=20, data_seed=7, data_file=None):
    if data_file:
        data = RegressionData.load(data_file)
    else:
        data = synthesize_regression(p, n, RngStream(data_seed))
    return cauchy_regression_horseshoe(data)


TARGETS = {
    "gaussian_2d": lambda cov=((1.0, 0.8), (0.8, 1.0)): gaussian_2d(cov),
    "gaussian": lambda cov: Gaussian(cov),
    "quartic": lambda dim=1: quartic(dim),
    "laplace": lambda dim=100: laplace_product(dim),
    "arcsine": lambda: arcsine_boundary(),
    "box_gaussian": lambda dim=100, sigma2=1.0: box_gaussian(dim, sigma2),
    "coupled_quartic_2d": lambda: coupled_quartic_2d(),
    "cauchy": lambda dim=1: Cauchy(dim),
    "horseshoe_regression": _horseshoe,
}


def build_target(cfg: dict):
    tid = cfg.get("id")
    if tid not in TARGETS:
        raise SpecError(f"unknown target id {tid!r}; known: {sorted(TARGETS)}")
    try:
        return TARGETS[tid](**cfg.get("params", {}))
    except TypeError as exc:
        raise SpecError(f"bad parameters for target {tid}: {exc}") from None


def _transform(name, dim):
    if name == "signlog":
        return signlog_transform()
    if name == "isotropic":
        return isotropic_transform(dim)
    raise SpecError(f"unknown transform {name!r}")


def build_kernel(cfg: dict, target):
    sid = cfg.get("id")
    p = dict(cfg.get("params", {}))
    try:
        if sid == "mala":
            return mala(p["h"])
        if sid == "ula":
            return ula(p["h"])
        if sid == "malta":
            return malta(p["h"], p["R"])
        if sid == "tamed_mala":
            return tamed_mala(p["h"], p.get("alpha", 1.0), p.get("mode", "global"), p.get("adjusted", True))
        if sid == "barker":
            # scale sqrt(2h) matches the Langevin noise level at step h
            return barker(math.sqrt(2 * p["h"]), p.get("mode", "coordinatewise"))
        if sid in ("pmala", "pula"):
            return ProximalLangevinKernel(p["h"], p.get("lam"), adjusted=sid == "pmala")
        if sid == "ila":
            return ThetaKernel(ThetaConfig(p["theta"], p["h"]))
        if sid == "hmc":
            K = kinetic_energy(p.get("kinetic", "gaussian"), **p.get("kinetic_params", {}))
            return HmcKernel(HmcConfig(p["h"], p.get("L", 10), p.get("traj_rate"), p.get("refresh_corr", 0.0)), K)
        if sid == "transformed_mala":
            return transformed_kernel(mala(p["h"]), _transform(p.get("transform", "signlog"), target.dim))
        if sid == "sphere_rwm":
            return StereographicRWM(p["tangent_scale"], p.get("radius", 1.0))
    except KeyError as exc:
        raise SpecError(f"sampler {sid} needs parameter {exc}") from None
    raise SpecError(f"unknown sampler id {sid!r}")


def _x0(spec: ExperimentSpec, target):
    x0 = spec.x0
    if x0 is None:
        return np.zeros(target.dim)
    if x0 == "exact":
        return lambda rng: target.exact_sample(rng, 1)[0]
    arr = np.atleast_1d(np.asarray(x0, float))
    return np.full(target.dim, arr[0]) if arr.size == 1 else arr


# ------------------------------------------------------------------ runners

class Output:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name):
        self.files.append(name)
        return self.root / name


def _chain_diagnostics(out, spec, target, traces, metrics):
    first = traces[0]
    dg.write_trace_csv(out.path("trace.csv"), first)
    max_lag = min(spec.options.get("acf_max_lag", 100), len(first) - 1)
    series = first.positions[:, 0]
    if max_lag >= 1 and np.ptp(series) > 0:
        dg.write_acf_csv(out.path("acf.csv"), dg.acf(series, max_lag))
        metrics["ess_first_coordinate"] = dg.ess(series)
    dg.write_summary_csv(out.path("summary.csv"), dg.summary(first))
    _error_curve(out, spec, target, traces, metrics)


def _checkpoints(spec, n):
    cps = spec.options.get("checkpoints")
    if cps is None:
        cps = np.unique(np.geomspace(10, max(n, 10), 25).astype(np.int64))
    return np.asarray([c for c in cps if c <= n] or [n], np.int64)


def _error_curve(out, spec, target, items, metrics, n_budget=None):
    tail = spec.options.get("tail_threshold")
    n = n_budget or spec.n_iters
    cps = _checkpoints(spec, n)
    if tail is not None:
        truth = spec.options.get("tail_prob") or target.tail_prob(tail)
        if spec.options.get("tail_statistic") == "abs":
            items = [np.abs(t.positions[:, 0]) for t in items]
        curve = dg.tail_error_curve(items, tail, truth, cps)
    elif target.has("true_moments") and all(hasattr(t, "positions") for t in items):
        curve = dg.mse_expectation(items, target.true_moments()[0], cps)
    else:
        return
    dg.write_error_curve_csv(out.path("error_curve.csv"), curve)
    metrics["final_error"] = float(curve.values[-1])


def run_chain_kind(spec, out, workers):
    target = build_target(spec.target)
    if spec.options.get("engine") == "fused":
        return _run_laplace_fused(spec, out, target)
    kernel = build_kernel(spec.sampler, target)
    cs = ChainSpec(target, kernel, _x0(spec, target), spec.n_iters, spec.root_seed, spec.thin,
                   spec.target["id"], spec.sampler["id"])
    traces = run_replicates(cs, spec.n_replicates, workers)
    rates = [t.acceptance_rate for t in traces]
    metrics = {"acceptance_mean": float(np.mean(rates)), "acceptance_per_replicate": rates}
    _chain_diagnostics(out, spec, target, traces, metrics)
    return metrics


def _run_laplace_fused(spec, out, target):
    sid = spec.sampler["id"]
    p = spec.sampler.get("params", {})
    if spec.target["id"] != "laplace" or sid not in ("mala", "pmala") or p.get("lam", p["h"]) != p["h"]:
        raise SpecError("the fused engine covers MALA and P-MALA (lambda = h) on the Laplace target")
    h, d, n = float(p["h"]), target.dim, spec.n_iters
    cps = _checkpoints(spec, n)
    chunk = int(spec.options.get("chunk", 1000))
    rates, curves, first_trace = [], [], None
    for k in range(spec.n_replicates):
        rng = RngStream(spec.root_seed, k)
        x0 = _x0(spec, target)
        x = np.array(x0(rng) if callable(x0) else x0, float)
        sumx = np.zeros(d)
        trace0 = np.empty(n)
        acc = 0
        done = 0
        errs = []
        ci = 0
        while done < n:
            m = min(chunk, n - done, int(cps[ci]) - done if ci < len(cps) else chunk)
            noise = rng.normal((m, d))
            logu = np.log(rng.uniform(m))
            acc += laplace_langevin_chunk(x, h, noise, logu, sid == "pmala", sumx, trace0[done:done + m])
            done += m
            while ci < len(cps) and cps[ci] == done:
                errs.append(float(np.mean((sumx / done) ** 2)))
                ci += 1
        rates.append(acc / n)
        curves.append(errs)
        if k == 0:
            first_trace = trace0
    curve = dg.ErrorCurve(cps, np.mean(curves, axis=0))
    dg.write_error_curve_csv(out.path("error_curve.csv"), curve)
    dg.write_csv(out.path("trace.csv"), ["iteration", "x1"], zip(range(1, n + 1), first_trace))
    dg.write_acf_csv(out.path("acf.csv"), dg.acf(first_trace, min(100, n - 1)))
    return {"acceptance_mean": float(np.mean(rates)), "acceptance_per_replicate": rates,
            "final_error": float(curve.values[-1]), "engine": f"fused-{backend()}"}


def run_pdmp_kind(spec, out, workers):
    target = build_target(spec.target)
    p = dict(spec.sampler.get("params", {}))
    sid = spec.sampler["id"]
    cfg = PdmpConfig(n_events=p.get("n_events"), total_time=p.get("total_time"),
                     max_evaluations=p.get("max_evaluations"), refresh_rate=p.get("refresh_rate", 0.0),
                     horizon=p.get("horizon", 1.0), mode=p.get("mode", "auto"), velocity=p.get("velocity", "gaussian"))
    x0 = _x0(spec, target)

    def runner(_, rng):
        start = x0(rng) if callable(x0) else x0
        if sid == "zz":
            return simulate_zz(target, cfg, start, rng)
        if sid == "bps":
            return simulate_bps(target, cfg, start, rng)
        if sid == "speedup_zz":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return simulate_speedup_zz(target, SpeedFunction(p.get("k", 0)), cfg, start, rng)
        raise SpecError(f"unknown PDMP sampler {sid!r}")

    trajs = run_replicates(ChainSpec(target, None, x0, 0, spec.root_seed), spec.n_replicates, workers, runner)
    first = trajs[0]
    first.to_csv(out.path("skeleton.csv"))
    clock = "original" if sid == "speedup_zz" else "process"
    delta = spec.options.get("grid_spacing")
    if delta is None:
        total = first.original_times()[-1] if clock == "original" else first.total_time
        delta = total / spec.options.get("grid_samples", 10_000)
    samples = first.samples(delta, clock)
    dg.write_csv(out.path("samples.csv"), ["index"] + [f"x{i + 1}" for i in range(target.dim)],
                 ([i] + list(s) for i, s in enumerate(samples)))
    metrics = {"switches_per_replicate": [t.n_switches for t in trajs],
               "evaluations_per_replicate": [int(t.evaluations[-1]) for t in trajs],
               "grid_spacing": float(delta), "grid_samples": int(len(samples))}
    if len(samples) > 2 and np.ptp(samples[:, 0]) > 0:
        dg.write_acf_csv(out.path("acf.csv"), dg.acf(samples[:, 0], min(spec.options.get("acf_max_lag", 100),
                                                                            len(samples) - 1)))
    dg.write_summary_csv(out.path("summary.csv"), dg.summary(samples))
    if sid != "speedup_zz":
        m, s2 = first.time_average()
        metrics["time_average_mean"] = m.tolist()
        metrics["time_average_cov"] = (s2 - np.outer(m, m)).tolist()
    if spec.options.get("tail_threshold") is not None:
        budget = spec.sampler["params"].get("max_evaluations") or int(max(t.evaluations[-1] for t in trajs))
        _error_curve(out, spec, target, trajs, metrics, budget)
    return metrics


def run_rhmc_kind(spec, out, workers):
    target = build_target(spec.target)
    p = spec.sampler.get("params", {})
    x0 = _x0(spec, target)

    def runner(_, rng):
        return rhmc_exact_gaussian(target.cov, p.get("rho", 0.0), p.get("rate", 0.2), spec.n_iters, x0, rng)

    traces = run_replicates(ChainSpec(target, None, x0, spec.n_iters, spec.root_seed), spec.n_replicates, workers, runner)
    metrics = {"max_relative_energy_drift": max(t.meta["max_relative_energy_drift"] for t in traces),
               "correlation": float(np.corrcoef(traces[0].positions.T)[0, 1])}
    _chain_diagnostics(out, spec, target, traces, metrics)
    return metrics


def run_zz_box_kind(spec, out, workers):
    target = build_target(spec.target)
    if spec.target["id"] != "box_gaussian":
        raise SpecError("zz_box runs on the box_gaussian target")
    n_events = int(spec.sampler.get("params", {}).get("n_events", 10 ** 6))
    d = target.dim
    rows, second = [], []
    for k in range(spec.n_replicates):
        rng = RngStream(spec.root_seed, k)
        x0 = _x0(spec, target)
        x0 = x0(rng) if callable(x0) else x0
        v0 = np.where(rng.uniform(d) < 0.5, -1.0, 1.0)
        res = zz_box_gaussian(x0, v0, target.sigma2, n_events, rng.exponential(d + n_events))
        second.append(res["second_moment"])
        if k == 0:
            rows = list(zip(res["skeleton_t"], res["skeleton_x"]))
            m0, s0 = res["mean"], res["second_moment"]
    dg.write_csv(out.path("skeleton_x1.csv"), ["t", "x1"], rows)
    dg.write_csv(out.path("moments.csv"), ["coordinate", "mean", "second_moment"],
                 ((i, m0[i], s0[i]) for i in range(d)))
    sec = np.mean(second, axis=0)
    return {"second_moment_mean": float(sec.mean()), "second_moment_coord1": float(sec[0]),
            "true_second_moment": target.coordinate_variance(), "engine": f"fused-{backend()}"}


def run_vector_field_kind(spec, out, workers):
    target = build_target(spec.target)
    o = spec.options
    xs = np.linspace(o.get("lo", -2.0), o.get("hi", 2.0), o.get("grid", 21))
    rows = []
    for name, cfg in spec.sampler["params"]["variants"].items():
        lc = LangevinConfig(**cfg)
        for a in xs:
            for b in xs:
                x = np.array([a, b])
                j = expected_jump(x, target, lc)
                rows.append((name, a, b, j[0], j[1], target.log_density(x)))
    dg.write_csv(out.path("vector_field.csv"), ["sampler", "x1", "x2", "jump1", "jump2", "log_density"], rows)
    return {"rows": len(rows)}


def run_envelope_kind(spec, out, workers):
    target = build_target(spec.target)
    lam = spec.sampler["params"]["lam"]
    xs = np.linspace(spec.options.get("lo", -5.0), spec.options.get("hi", 5.0), spec.options.get("grid", 1001))
    rows = [(x, -target.log_density(np.array([x])), moreau_envelope(target, lam, np.array([x]))[0]) for x in xs]
    dg.write_csv(out.path("envelope.csv"), ["x", "U", "envelope"], rows)
    huber = np.where(np.abs(xs) <= lam, xs ** 2 / (2 * lam), np.abs(xs) - lam / 2)
    return {"max_abs_error_vs_huber": float(np.max(np.abs(np.array([r[2] for r in rows]) - huber)))}


def run_barker_density_kind(spec, out, workers):
    target = build_target(spec.target)
    h = spec.sampler["params"]["h"]
    x = float(spec.options.get("position", -2.0))
    g = float(target.gradient(np.array([x]))[0])
    sig = math.sqrt(2 * h)
    ys = np.linspace(x - 6 * sig, x + 6 * sig + 2 * h * abs(g), spec.options.get("grid", 801))
    z = ys - x
    phi = np.exp(-0.5 * (z / sig) ** 2) / (sig * math.sqrt(2 * math.pi))
    barker_d = 2 * phi / (1 + np.exp(-g * z))
    mean = x + h * g
    mala_d = np.exp(-0.25 * (ys - mean) ** 2 / h) / math.sqrt(4 * math.pi * h)
    dg.write_csv(out.path("proposal_densities.csv"), ["y", "barker", "mala", "random_walk"],
                 zip(ys, barker_d, mala_d, phi))
    return {"gradient": g, "mala_mean": mean}


def run_contour_kind(spec, out, workers):
    target = build_target(spec.target)
    o = spec.options
    xs = np.linspace(-o.get("xmax", 1.5), o.get("xmax", 1.5), o.get("grid", 101))
    vs = np.linspace(-o.get("vmax", 2.0), o.get("vmax", 2.0), o.get("grid", 101))
    rows, paths = [], []
    for ke in spec.sampler["params"]["kinetics"]:
        K = kinetic_energy(ke["name"], **ke.get("params", {}))
        for a in xs:
            for b in vs:
                rows.append((K.name, a, b, -target.log_density(np.array([a])) + K.value(np.array([b]))))
        x, v = np.array([1.0]), np.array([0.0])
        h = o.get("path_step", 0.001)
        for i in range(o.get("path_steps", 3000)):
            paths.append((K.name, i * h, x[0], v[0]))
            x, v, _ = _leapfrog(x, v, h, 1, target, K)
    dg.write_csv(out.path("hamiltonian_grid.csv"), ["kinetic", "x", "v", "H"], rows)
    dg.write_csv(out.path("hamiltonian_paths.csv"), ["kinetic", "t", "x", "v"], paths)
    return {"grid_rows": len(rows)}


def run_pointcloud_kind(spec, out, workers):
    o = spec.options
    rng = RngStream(spec.root_seed, 0)
    half = o.get("half_width", 10.0)
    pts = (2 * rng.uniform((o.get("n_points", 2000), 2)) - 1) * half
    tf = isotropic_transform(2)
    rows = [(p[0], p[1], *tf.forward(p)) for p in pts]
    dg.write_csv(out.path("pointcloud.csv"), ["x1", "x2", "y1", "y2"], rows)
    return {"n_points": len(rows)}


RUNNERS = {
    "chain": run_chain_kind,
    "pdmp": run_pdmp_kind,
    "rhmc": run_rhmc_kind,
    "zz_box": run_zz_box_kind,
    "vector_field": run_vector_field_kind,
    "envelope": run_envelope_kind,
    "barker_densities": run_barker_density_kind,
    "hamiltonian_contours": run_contour_kind,
    "pointcloud": run_pointcloud_kind,
}


def validate(spec: ExperimentSpec):
    """Resolve ids and parameters without running anything."""
    if spec.kind not in RUNNERS:
        raise SpecError(f"unknown experiment kind {spec.kind!r}")
    if spec.n_iters < 0 or spec.n_replicates < 1 or spec.thin < 1:
        raise SpecError("budgets must be positive")
    target = build_target(spec.target)
    if spec.kind == "chain" and spec.options.get("engine") != "fused":
        build_kernel(spec.sampler, target)
    if spec.kind == "pdmp" and spec.sampler.get("id") not in ("zz", "bps", "speedup_zz"):
        raise SpecError(f"unknown PDMP sampler {spec.sampler.get('id')!r}")
    apply_paper_scale(spec)
    return target


def run_experiment(spec: ExperimentSpec, out_dir, workers: int = 1, scale: str = "desk") -> dict:
    validate(spec)
    out = Output(out_dir)
    metrics = RUNNERS[spec.kind](spec, out, workers)
    manifest = {"spec": spec.to_dict(), "scale": scale, "root_seed": spec.root_seed,
                "library_version": __version__, "backend": backend(), "schema_version": SCHEMA_VERSION,
                "paper_scale_mapping": spec.paper_scale, "files": sorted(out.files), "metrics": _jsonable(metrics)}
    with open(out.root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def sweep(spec: ExperimentSpec, param: str, values, out_dir, workers: int = 1) -> list:
    get_path(spec, param)
    out = Output(out_dir)

    def point(k):
        val = values[k]
        s = set_path(spec, param, val)
        s.options = dict(s.options, sweep=None)
        # sweep points write to disjoint subdirectories
        m = run_experiment(s, out.root / f"point{k:03d}", 1)["metrics"]
        return val, m.get("acceptance_mean", float("nan")), m.get("final_error", float("nan")), s.n_replicates

    values = list(values)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(point, range(len(values))))
    else:
        rows = [point(k) for k in range(len(values))]
    dg.write_csv(out.path("sweep.csv"), ["value", "mean_acceptance", "final_mse", "n_replicates"],
                 ([v if isinstance(v, (int, float)) else json.dumps(v, sort_keys=True), a, e, n]
                  for v, a, e, n in rows))
    with open(out.root / "manifest.json", "w") as fh:
        json.dump({"spec": spec.to_dict(), "sweep": {"param": param, "values": list(values)},
                   "library_version": __version__, "backend": backend(), "schema_version": SCHEMA_VERSION},
                  fh, indent=2, sort_keys=True)
    return rows


def load_spec(name_or_path: str) -> ExperimentSpec:
    if name_or_path in REGISTRY:
        return REGISTRY[name_or_path].copy()
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        with open(p) as fh:
            d = json.load(fh)
        return ExperimentSpec.from_dict(d["spec"] if "spec" in d else d)
    raise SpecError(f"unknown experiment {name_or_path!r}")


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "robustmc_runs"))


# ------------------------------------------------------------------ registry

GAUSS = {"id": "gaussian_2d"}
DESK = {"n_replicates": 20}
LAPLACE_HS = [round(0.01 * k, 2) for k in range(1, 11)]


def _spec(name, kind, target, sampler, **kw):
    return ExperimentSpec(name=name, kind=kind, target=target, sampler=sampler, **kw)


def _horseshoe_target():
    return {"id": "horseshoe_regression", "params": {"p": 5, "n": 20, "data_seed": 7}}


REGISTRY = {s.name: s for s in [
    _spec("fig1_mala_gauss2d", "chain", GAUSS, {"id": "mala", "params": {"h": 0.35}}, n_iters=10_000,
          x0=[4.0, 5.0], description="MALA on the correlated 2D Gaussian"),
    _spec("fig2_rhmc_gauss2d", "rhmc", GAUSS, {"id": "rhmc_exact", "params": {"rho": 0.0, "rate": 0.2}},
          n_iters=10_000, x0=[4.0, 5.0], description="Exact randomized HMC on the correlated 2D Gaussian"),
    _spec("fig3_bps_gauss2d", "pdmp", GAUSS,
          {"id": "bps", "params": {"n_events": 10_000, "refresh_rate": 0.66}}, x0=[4.0, 5.0],
          description="Bouncy Particle Sampler on the correlated 2D Gaussian"),
    _spec("fig4_zz_gauss2d", "pdmp", GAUSS, {"id": "zz", "params": {"n_events": 10_000, "refresh_rate": 0.0}},
          x0=[4.0, 5.0], description="Zig-Zag sampler on the correlated 2D Gaussian"),
    _spec("fig5_mala_quartic_stepsweep", "chain", {"id": "quartic", "params": {"dim": 1}},
          {"id": "mala", "params": {"h": 0.1}}, n_iters=1000, x0=[4.0],
          options={"sweep": {"param": "sampler.params.h", "values": [0.001, 0.01, 0.05, 0.1]}},
          description="MALA traces on exp(-x^4) from x0 = 4 across step sizes"),
    _spec("fig6_mala_laplace10k", "chain", {"id": "laplace", "params": {"dim": 100}},
          {"id": "mala", "params": {"h": 0.01}}, n_iters=20_000, x0=5.0, options={
              "engine": "fused", "checkpoints": list(range(1000, 20_001, 1000)),
              "sweep": {"param": "sampler.params.h", "values": LAPLACE_HS}},
          paper_scale={"target.params.dim": 10_000, "n_iters": 100_000, "n_replicates": 100,
                       "options.checkpoints": list(range(5000, 100_001, 5000))},
          description="MALA on the product Laplace target, step-size sweep", **DESK),
    _spec("fig7_mala_arcsine", "chain", {"id": "arcsine"}, {"id": "mala", "params": {"h": 0.1}}, n_iters=10_000,
          x0=[0.5], options={"tail_threshold": 0.9, "tail_statistic": "abs"},
          description="MALA on the arcsine law with exploding boundary density", **DESK),
    _spec("fig8_mala_boxgauss", "chain", {"id": "box_gaussian", "params": {"dim": 100, "sigma2": 1.0}},
          {"id": "mala", "params": {"h": 5e-7}}, n_iters=20_000, x0=0.0,
          options={"sweep": {"param": "sampler.params.h", "values": [1e-7, 5e-7, 1e-5, 1e-3, 1e-1]}},
          paper_scale={"target.params.dim": 10_000, "n_iters": 100_000, "n_replicates": 100},
          description="MALA on the box-constrained Gaussian, step-size sweep", **DESK),
    _spec("fig9_malta_quartic", "chain", {"id": "quartic", "params": {"dim": 1}},
          {"id": "malta", "params": {"h": 0.1, "R": 10.0}}, n_iters=1000, x0=[4.0],
          options={"sweep": {"param": "sampler.params.h", "values": [0.001, 0.01, 0.05, 0.1]}},
          description="Truncated-drift MALA on exp(-x^4)"),
    _spec("fig10_tamed_quartic", "chain", {"id": "quartic", "params": {"dim": 1}},
          {"id": "tamed_mala", "params": {"h": 0.1, "alpha": 1.0}}, n_iters=1000, x0=[4.0],
          options={"sweep": {"param": "sampler.params.alpha", "values": [1.0, 0.5]}},
          description="Tamed MALA on exp(-x^4)"),
    _spec("fig11_vector_fields", "vector_field", {"id": "coupled_quartic_2d"},
          {"id": "langevin_family", "params": {"variants": {
              "mala": {"step_size": 0.1},
              "malta": {"step_size": 0.1, "drift": "truncate", "radius": 10.0},
              "tamed": {"step_size": 0.1, "drift": "tame", "alpha": 1.0}}}},
          options={"lo": -2.0, "hi": 2.0, "grid": 21},
          description="Expected proposed jump fields on the coupled quartic target"),
    _spec("fig12_moreau_envelope", "envelope", {"id": "laplace", "params": {"dim": 1}},
          {"id": "moreau", "params": {"lam": 1.0}}, options={"lo": -5.0, "hi": 5.0, "grid": 1001},
          description="|x| and its Moreau envelope (Huber function)"),
    _spec("fig13_pmala_laplace", "chain", {"id": "laplace", "params": {"dim": 100}},
          {"id": "pmala", "params": {"h": 0.01}}, n_iters=20_000, x0=5.0, options={
              "engine": "fused", "checkpoints": list(range(1000, 20_001, 1000)),
              "sweep": {"param": "sampler.params.h", "values": LAPLACE_HS}},
          paper_scale={"target.params.dim": 10_000, "n_iters": 100_000, "n_replicates": 100,
                       "options.checkpoints": list(range(5000, 100_001, 5000))},
          description="Proximal MALA on the product Laplace target, step-size sweep", **DESK),
    _spec("fig14_barker_quartic", "chain", {"id": "quartic", "params": {"dim": 1}},
          {"id": "barker", "params": {"h": 0.1}}, n_iters=1000, x0=[4.0],
          options={"sweep": {"param": "sampler.params.h", "values": [0.001, 0.01, 0.05, 0.1, 0.5]}},
          description="Barker proposal on exp(-x^4)"),
    _spec("fig15_barker_arcsine", "chain", {"id": "arcsine"}, {"id": "barker", "params": {"h": 0.1}},
          n_iters=10_000, x0=[0.5], options={"tail_threshold": 0.9, "tail_statistic": "abs"},
          description="Barker proposal on the arcsine law", **DESK),
    _spec("fig16_barker_proposal_densities", "barker_densities", {"id": "quartic", "params": {"dim": 1}},
          {"id": "proposals", "params": {"h": 0.5}}, options={"position": -2.0, "grid": 801},
          description="Barker, MALA and random-walk proposal densities at x = -2"),
    _spec("fig18_hamiltonian_contours", "hamiltonian_contours", {"id": "quartic", "params": {"dim": 1}},
          {"id": "kinetics", "params": {"kinetics": [{"name": "gaussian"},
                                                     {"name": "power", "params": {"p": 4 / 3}}]}},
          description="Level sets of x^4 + K(v) and the flow from (1, 0)"),
    _spec("fig19_hmc_power_ke", "chain", {"id": "quartic", "params": {"dim": 1}},
          {"id": "hmc", "params": {"h": 0.05, "L": 20, "kinetic": "power", "kinetic_params": {"p": 4 / 3}}},
          n_iters=1000, x0=[5.0], options={"sweep": {"param": "sampler.params", "values": [
              {"h": 0.01, "L": 50, "kinetic": "power", "kinetic_params": {"p": 4 / 3}},
              {"h": 0.05, "L": 20, "kinetic": "power", "kinetic_params": {"p": 4 / 3}},
              {"h": 0.1, "L": 10, "kinetic": "power", "kinetic_params": {"p": 4 / 3}},
              {"h": 0.2, "L": 5, "kinetic": "power", "kinetic_params": {"p": 4 / 3}}]}},
          description="HMC with kinetic energy |v|^(4/3) on exp(-x^4)"),
    _spec("fig20_zz_boxgauss", "zz_box", {"id": "box_gaussian", "params": {"dim": 100, "sigma2": 1.0}},
          {"id": "zz", "params": {"n_events": 1_000_000}}, x0=0.0,
          paper_scale={"target.params.dim": 10_000},
          description="Zig-Zag with wall flips on the box-constrained Gaussian"),
    _spec("fig21_mala_cauchy", "chain", {"id": "cauchy", "params": {"dim": 1}}, {"id": "mala", "params": {"h": 25.0}},
          n_iters=10_000, x0=[0.0], options={"tail_threshold": 5.0, "tail_prob": 0.0627},
          paper_scale={"n_replicates": 100}, description="MALA on the 1D Cauchy target", **DESK),
    _spec("fig22_mala_horseshoe", "chain", _horseshoe_target(), {"id": "mala", "params": {"h": 0.01}},
          n_iters=10_000, x0=0.0, options={"acf_max_lag": 100},
          description="MALA on the Cauchy regression posterior with horseshoe prior", **DESK),
    _spec("fig23_isotropic_pointcloud", "pointcloud", {"id": "cauchy", "params": {"dim": 2}},
          {"id": "isotropic", "params": {}}, options={"n_points": 2000, "half_width": 10.0},
          description="Uniform points on a square and their images under the isotropic log map"),
    _spec("fig24_transformed_mala_cauchy", "chain", {"id": "cauchy", "params": {"dim": 1}},
          {"id": "transformed_mala", "params": {"h": 0.5, "transform": "signlog"}}, n_iters=10_000, x0=[0.0],
          options={"tail_threshold": 5.0, "tail_prob": 0.0627}, paper_scale={"n_replicates": 100},
          description="MALA on the sign-log pushforward of the 1D Cauchy target", **DESK),
    _spec("fig25_timechange_zz_2dcauchy", "pdmp", {"id": "cauchy", "params": {"dim": 2}},
          {"id": "speedup_zz", "params": {"k": 0, "n_events": 2000}}, x0=[0.0, 0.0],
          options={"grid_spacing": 0.5}, description="Speed-up Zig-Zag on the 2D isotropic Cauchy target"),
    _spec("fig26_speedup_zz_cauchy", "pdmp", {"id": "cauchy", "params": {"dim": 1}},
          {"id": "speedup_zz", "params": {"k": 0, "n_events": None, "max_evaluations": 10_000}}, x0=[0.0],
          options={"tail_threshold": 5.0, "tail_prob": 0.0627}, paper_scale={"n_replicates": 100},
          description="Speed-up Zig-Zag on the 1D Cauchy target", **DESK),
    _spec("fig27_speedup_zz_horseshoe", "pdmp", _horseshoe_target(),
          {"id": "speedup_zz", "params": {"k": 0, "n_events": None, "max_evaluations": 10_000, "horizon": 0.5}},
          x0=0.0, options={"grid_samples": 10_000, "acf_max_lag": 100},
          description="Speed-up Zig-Zag on the Cauchy regression posterior", **DESK),
]}

REGISTRY["fig22_transformed_mala_horseshoe"] = _spec(
    "fig22_transformed_mala_horseshoe", "chain", _horseshoe_target(),
    {"id": "transformed_mala", "params": {"h": 0.0018, "transform": "isotropic"}}, n_iters=10_000, x0=0.0,
    options={"acf_max_lag": 100}, description="Transformed MALA (isotropic log map) on the horseshoe posterior",
    **DESK)


def list_experiments():
    return [(name, spec.description) for name, spec in REGISTRY.items()]

"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line and the
terminal summary repeats them in order.

Criteria whose documented outcome is a failure of the stated threshold are
marked ``xfail(strict=True)``: the measurement still runs in full and the
summary reports FAIL, but an unexpected pass would break the suite.
"""
import math
import warnings

import numpy as np
import pytest
from scipy import stats

from robustmc import cli
from robustmc import diagnostics as dg
from robustmc._kernels import zz_box_gaussian
from robustmc.core import ChainSpec, ChainState, RngStream, run_chain, run_replicates
from robustmc.experiments import REGISTRY, build_kernel, build_target, sweep, _x0
from robustmc.gradient_samplers import barker, mala, malta, tamed_mala
from robustmc.hmc import HmcConfig, HmcKernel, hamiltonian, kinetic_energy, leapfrog, rhmc_exact_gaussian
from robustmc.pdmp import (PdmpConfig, PolynomialRate, SpeedFunction, ThinnedRate, simulate_bps,
                           simulate_speedup_zz, simulate_zz)
from robustmc.proximal import ProxSpec, moreau_envelope, numeric_prox, pmala, prox
from robustmc.targets import (Cauchy, PowerRadial, arcsine_boundary, box_gaussian, coupled_quartic_2d,
                              finite_difference_gradient, gaussian_2d, laplace_product, quartic)
from robustmc.transforms import pushforward_target, signlog_transform

CAUCHY_TAIL = 0.0627


def registry_traces(name, **changes):
    spec = REGISTRY[name].copy()
    for k, v in changes.items():
        setattr(spec, k, v)
    target = build_target(spec.target)
    kernel = build_kernel(spec.sampler, target)
    cs = ChainSpec(target, kernel, _x0(spec, target), spec.n_iters, spec.root_seed)
    return spec, target, run_replicates(cs, spec.n_replicates)


# 1 ----------------------------------------------------------------------

def _zoo():
    from robustmc.experiments import _horseshoe
    g = np.random.default_rng(11)
    yield "gaussian_2d", gaussian_2d(), g.normal(size=(100, 2)) * 2
    yield "quartic_3d", quartic(3), g.normal(size=(100, 3)) * 1.5
    yield "laplace_5d", laplace_product(5), g.uniform(0.05, 3, (100, 5)) * g.choice([-1, 1], (100, 5))
    yield "arcsine", arcsine_boundary(), g.uniform(-0.95, 0.95, (100, 1))
    yield "box_gaussian", box_gaussian(4), g.uniform(-0.95, 0.95, (100, 4))
    yield "coupled_quartic_2d", coupled_quartic_2d(), g.normal(size=(100, 2))
    yield "cauchy_1d", Cauchy(1), g.standard_cauchy((100, 1))
    yield "cauchy_2d", Cauchy(2), g.normal(size=(100, 2)) * 5
    yield "power_radial", PowerRadial(3, 1.2), g.normal(size=(100, 3)) * 3
    yield "horseshoe", _horseshoe(), g.normal(size=(100, 10))


def test_criterion_01_gradients(record):
    worst = {}
    for name, target, pts in _zoo():
        errs = []
        for x in pts:
            g = target.gradient(x)
            fd = finite_difference_gradient(target.log_density, x, 1e-6)
            errs.append(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1.0))
        worst[name] = max(errs)
    top = max(worst, key=worst.get)
    ok = all(e < 1e-5 for e in worst.values())
    record(1, "finite-difference gradient checks", ok, f"worst {top} rel err {worst[top]:.2e}")
    assert ok


# 2 ----------------------------------------------------------------------

def test_criterion_02_mala_gaussian(record):
    spec = REGISTRY["fig1_mala_gauss2d"]
    assert spec.sampler["params"]["h"] == 0.35 and spec.n_iters == 10_000 and spec.x0 == [4.0, 5.0]
    tr = run_chain(mala(0.35), gaussian_2d(), np.array([4.0, 5.0]), 10_000, RngStream(spec.root_seed))
    acc = tr.acceptance_rate
    corr = np.corrcoef(tr.positions.T)[0, 1]
    ok = 0.45 <= acc <= 0.70 and abs(corr - 0.8) <= 0.03
    record(2, "MALA on the correlated Gaussian", ok, f"acceptance {acc:.3f}, correlation {corr:.3f}")
    assert ok


# 3 ----------------------------------------------------------------------

def _first_inside(tr, radius=1.0):
    hits = np.nonzero(np.abs(tr.positions[:, 0]) < radius)[0]
    return int(hits[0]) if hits.size else None


def test_criterion_03_quartic(record):
    t = quartic(1)
    x0 = np.array([4.0])
    sticky = run_chain(mala(0.1), t, x0, 1000, RngStream(3, 0))
    rescued = {"malta": run_chain(malta(0.1, 10.0), t, x0, 1000, RngStream(3, 1)),
               "tamed": run_chain(tamed_mala(0.1, 1.0), t, x0, 1000, RngStream(3, 2))}
    ok = sticky.acceptance_rate < 0.01
    parts = [f"MALA acceptance {sticky.acceptance_rate:.3f}"]
    for name, tr in rescued.items():
        first = _first_inside(tr)
        ok &= first is not None and first <= 200 and tr.acceptance_rate > 0.3
        parts.append(f"{name} inside at {first}, acceptance {tr.acceptance_rate:.2f}")
    record(3, "quartic stickiness and rescue", ok, "; ".join(parts))
    assert ok


# 4 ----------------------------------------------------------------------

def test_criterion_04_envelope(record):
    t = laplace_product(1)
    xs = np.linspace(-5, 5, 10_000)
    env = np.array([moreau_envelope(t, 1.0, np.array([x]))[0] for x in xs])
    huber = np.where(np.abs(xs) <= 1, xs ** 2 / 2, np.abs(xs) - 0.5)
    soft = np.sign(xs) * np.maximum(np.abs(xs) - 1, 0)
    p_an = np.array([prox(t, 1.0, np.array([x]))[0] for x in xs])
    p_num = np.array([numeric_prox(t, 1.0, np.array([x]), ProxSpec("numeric"))[0] for x in xs[::10]])
    e_env = np.max(np.abs(env - huber))
    e_prox = max(np.max(np.abs(p_an - soft)), np.max(np.abs(p_num - soft[::10])))
    ok = e_env < 1e-8 and e_prox <= 1e-10
    record(4, "Moreau envelope and prox of |x|", ok, f"envelope err {e_env:.1e}, prox err {e_prox:.1e}")
    assert ok


# 5 ----------------------------------------------------------------------

INVARIANCE_KERNELS = {
    "mala": lambda: mala(0.35),
    "malta": lambda: malta(0.35, 1.0),
    "tamed_mala": lambda: tamed_mala(0.35, 1.0),
    "pmala": lambda: pmala(0.35),
    "barker": lambda: barker(math.sqrt(0.7)),
    "hmc_gaussian": lambda: HmcKernel(HmcConfig(0.3, 5), kinetic_energy("gaussian")),
    "hmc_relativistic": lambda: HmcKernel(HmcConfig(0.3, 5), kinetic_energy("relativistic")),
    "hmc_power": lambda: HmcKernel(HmcConfig(0.3, 5), kinetic_energy("power", p=4 / 3)),
    "hmc_laplace": lambda: HmcKernel(HmcConfig(0.2, 5), kinetic_energy("laplace")),
}


def test_criterion_05_exact_invariance(record):
    t = gaussian_2d()
    C = t.cov
    n = 100_000
    rng = RngStream(55)
    X = t.exact_sample(rng.substream(0), n)
    report, ok = [], True
    for j, (name, make) in enumerate(INVARIANCE_KERNELS.items()):
        k = make()
        r = rng.substream(j + 1)
        Y = np.empty_like(X)
        for i in range(n):
            Y[i] = k(ChainState.at(t, X[i]), t, r)[0].position
        z = np.abs(Y.mean(0)) / np.sqrt(np.diag(C) / n)
        cov_err = np.max(np.abs(np.cov(Y.T) - C) / np.abs(C))
        moved = np.mean(np.any(Y != X, axis=1))
        good = bool(np.all(z < 4) and cov_err < 0.05 and moved > 0.05)
        ok &= good
        report.append(f"{name} z={z.max():.1f} cov={cov_err:.3f}")
    record(5, "one-step invariance of every MH kernel", ok, ", ".join(report))
    assert ok


# 6 ----------------------------------------------------------------------

def test_criterion_06_laplace_sweep(record, tmp_path):
    hs = [round(0.01 * k, 2) for k in range(1, 11)]
    rows = {}
    for name in ("fig6_mala_laplace10k", "fig13_pmala_laplace"):
        spec = REGISTRY[name]
        assert spec.target["params"]["dim"] == 100
        rows[name] = [r[1] for r in sweep(spec, "sampler.params.h", hs, tmp_path / name)]
    m, p = np.array(rows["fig6_mala_laplace10k"]), np.array(rows["fig13_pmala_laplace"])
    ok = bool(np.all(np.diff(m) < 0) and np.all(p >= m))
    record(6, "Laplace acceptance sweep", ok,
           "MALA " + " ".join(f"{a:.3f}" for a in m) + " | P-MALA " + " ".join(f"{a:.3f}" for a in p))
    assert ok


# 7 ----------------------------------------------------------------------

def test_criterion_07_arcsine(record):
    truth = arcsine_boundary().tail_prob(0.9)
    assert abs(truth - 0.2871) < 5e-5

    def replicate_mean(name):
        _, _, traces = registry_traces(name)
        return float(np.mean([np.mean(np.abs(t.positions[:, 0]) > 0.9) for t in traces]))

    b = replicate_mean("fig15_barker_arcsine")
    m = replicate_mean("fig7_mala_arcsine")
    eb, em = abs(b - truth), abs(m - truth)
    ok = abs(b - truth) <= 0.3 * truth and em >= 2 * eb
    record(7, "arcsine tail probability", ok, f"Barker {b:.4f} (err {eb:.4f}), MALA {m:.4f} (err {em:.4f})")
    assert ok


# 8 ----------------------------------------------------------------------

def _thinning_ks(n=50_000):
    # 1D standard Gaussian, Zig-Zag rate from x = -0.5 moving right: max(0, t - 0.5)
    exact = PolynomialRate([-0.5, 1.0])
    rng = RngStream(81)
    t_exact = np.array([exact.invert(e) for e in rng.substream(0).exponential(n)])
    thin_rng = rng.substream(1)
    thinned = ThinnedRate(exact.rate, lambda t0: (max(0.0, t0 - 0.5), 1.0), horizon=1.0)
    t_thin = np.array([thinned.sample(thin_rng) for _ in range(n)])
    cdf = lambda t: 1 - np.exp(-np.where(t > 0.5, 0.5 * (t - 0.5) ** 2, 0.0))
    return max(stats.ks_2samp(t_thin, t_exact).statistic, stats.kstest(t_thin, cdf).statistic)


def _cov_err(traj, C):
    m, s2 = traj.time_average()
    return float(np.max(np.abs(s2 - np.outer(m, m) - C) / np.abs(C)))


_C8 = {}


def _pdmp_results():
    if _C8:
        return _C8
    _C8["ks"] = _thinning_ks()
    C = gaussian_2d().cov
    zz_spec, bps_spec = REGISTRY["fig4_zz_gauss2d"], REGISTRY["fig3_bps_gauss2d"]
    assert bps_spec.sampler["params"]["refresh_rate"] == 0.66
    zz = simulate_zz(gaussian_2d(), PdmpConfig(n_events=10_000), np.array([4.0, 5.0]),
                     RngStream(zz_spec.root_seed))
    bps = simulate_bps(gaussian_2d(), PdmpConfig(n_events=10_000, refresh_rate=0.66), np.array([4.0, 5.0]),
                       RngStream(bps_spec.root_seed))
    _C8["zz"], _C8["bps"] = _cov_err(zz, C), _cov_err(bps, C)
    target = box_gaussian(100, 1.0)
    rng = RngStream(REGISTRY["fig20_zz_boxgauss"].root_seed)
    v0 = np.where(rng.uniform(100) < 0.5, -1.0, 1.0)
    res = zz_box_gaussian(np.zeros(100), v0, 1.0, 1_000_000, rng.exponential(100 + 1_000_000))
    _C8["truth"] = target.coordinate_variance()
    _C8["box"] = float(np.max(np.abs(res["second_moment"] - _C8["truth"])) / _C8["truth"])
    return _C8


def test_criterion_08_thinning_and_box():
    r = _pdmp_results()
    assert r["ks"] < 0.02
    assert abs(r["truth"] - 0.2911) < 1e-4 and r["box"] < 0.05


@pytest.mark.xfail(strict=True, reason="10^4 switches leave a few percent of Monte Carlo error; this seed exceeds 5%")
def test_criterion_08_pdmp(record):
    r = _pdmp_results()
    ok = r["ks"] < 0.02 and r["zz"] < 0.05 and r["bps"] < 0.05 and r["box"] < 0.05
    record(8, "PDMP correctness", ok, f"KS {r['ks']:.4f}, ZZ cov err {r['zz']:.3f}, BPS cov err {r['bps']:.3f}, "
                                      f"box second moment worst coordinate err {r['box']:.3f}")
    assert ok


# 9 ----------------------------------------------------------------------

def test_criterion_09_rhmc(record):
    t = gaussian_2d()
    tr = rhmc_exact_gaussian(t.cov, 0.0, 0.2, 10_000, np.array([4.0, 5.0]),
                             RngStream(REGISTRY["fig2_rhmc_gauss2d"].root_seed))
    corr = np.corrcoef(tr.positions.T)[0, 1]
    drift = tr.meta["max_relative_energy_drift"]
    ok = abs(corr - 0.8) <= 0.02 and drift < 1e-10
    record(9, "exact randomized HMC", ok, f"correlation {corr:.3f}, energy drift {drift:.1e}")
    assert ok


# 10 ---------------------------------------------------------------------

_C10 = {}


def _cauchy_errors():
    if _C10:
        return _C10
    budget = 10_000
    for name in ("fig24_transformed_mala_cauchy", "fig21_mala_cauchy"):
        spec, target, traces = registry_traces(name)
        assert spec.n_iters == budget and spec.n_replicates == 20
        _C10[name] = float(dg.tail_error_curve(traces, 5.0, CAUCHY_TAIL, [budget]).values[-1])
    spec = REGISTRY["fig26_speedup_zz_cauchy"]
    assert spec.sampler["params"]["max_evaluations"] == budget
    trajs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k in range(spec.n_replicates):
            trajs.append(simulate_speedup_zz(Cauchy(1), SpeedFunction(0), PdmpConfig(n_events=None, max_evaluations=budget),
                                             np.zeros(1), RngStream(spec.root_seed, k)))
    _C10["speedup_zz"] = float(dg.tail_error_curve(trajs, 5.0, CAUCHY_TAIL, [budget]).values[-1])
    return _C10


def test_criterion_10_robust_samplers_reach_tail():
    e = _cauchy_errors()
    assert e["fig24_transformed_mala_cauchy"] < 0.1
    assert e["speedup_zz"] < 0.1


@pytest.mark.xfail(strict=True, reason="plain MALA with the ESS-chosen step reaches the tail faster than the stated 0.3 floor")
def test_criterion_10_cauchy_tail(record):
    e = _cauchy_errors()
    t, z, m = e["fig24_transformed_mala_cauchy"], e["speedup_zz"], e["fig21_mala_cauchy"]
    ok = t < 0.1 and z < 0.1 and m > 0.3
    record(10, "Cauchy tail benchmark", ok,
           f"MSRE transformed MALA {t:.4f}, speed-up ZZ {z:.4f}, plain MALA {m:.4f} (needs > 0.3)")
    assert ok


# 11 ---------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="the stated closed form is not the sign-log pushforward of the Cauchy law")
def test_criterion_11_pushforward_oracle(record):
    pushed = pushforward_target(Cauchy(1), signlog_transform())
    ys = np.linspace(-6, 6, 241)
    diff = np.array([pushed.log_density(np.array([y])) - pushed.log_density(np.zeros(1)) for y in ys])
    stated = -np.log(2 * np.cosh(ys) - 1)
    derived = -np.log(np.exp(np.abs(ys)) - 2 + 2 * np.exp(-np.abs(ys)))
    err = np.max(np.abs(diff - stated))
    ok = err < 1e-10
    record(11, "sign-log pushforward of the Cauchy law", ok,
           f"max err vs stated form {err:.3f}; vs direct change of variables "
           f"{np.max(np.abs(diff - derived)):.1e}")
    assert ok


# 12 ---------------------------------------------------------------------

def test_criterion_12_leapfrog(record):
    t = gaussian_2d()
    K = kinetic_energy("gaussian")
    x0, v0 = np.array([1.0, -0.5]), np.array([0.3, 0.7])
    x1, v1 = leapfrog(x0, v0, 0.1, 25, t, K)
    xb, vb = leapfrog(x1, -v1, 0.1, 25, t, K)
    rev = max(np.max(np.abs(xb - x0)), np.max(np.abs(-vb - v0)))

    def flow(z):
        a, b = leapfrog(z[:2], z[2:], 0.1, 25, t, K)
        return np.concatenate([a, b])

    z0 = np.concatenate([x0, v0])
    eps = 1e-5
    J = np.column_stack([(flow(z0 + eps * e) - flow(z0 - eps * e)) / (2 * eps) for e in np.eye(4)])
    vol = abs(np.linalg.det(J) - 1)

    def max_dh(h):
        H0 = hamiltonian(t, K, x0, v0)
        x, v, worst = x0, v0, 0.0
        for _ in range(int(round(2.0 / h))):
            x, v = leapfrog(x, v, h, 1, t, K)
            worst = max(worst, abs(hamiltonian(t, K, x, v) - H0))
        return worst

    ratio = max_dh(0.1) / max_dh(0.05)
    ok = rev < 1e-10 and vol < 1e-8 and abs(ratio - 4) < 0.4
    record(12, "leapfrog properties", ok, f"reversibility {rev:.1e}, volume {vol:.1e}, energy ratio {ratio:.3f}")
    assert ok


# 13 ---------------------------------------------------------------------

SMALL = ["--set", "n_iters=300", "--set", "n_replicates=2"]
SMALL_PDMP = {"fig3_bps_gauss2d": ["--set", "sampler.params.n_events=500"],
              "fig4_zz_gauss2d": ["--set", "sampler.params.n_events=500"],
              "fig20_zz_boxgauss": ["--set", "sampler.params.n_events=20000"],
              "fig25_timechange_zz_2dcauchy": ["--set", "sampler.params.n_events=300"],
              "fig26_speedup_zz_cauchy": ["--set", "sampler.params.max_evaluations=500"],
              "fig27_speedup_zz_horseshoe": ["--set", "sampler.params.max_evaluations=500"]}


def _csvs(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


def test_criterion_13_determinism(record, tmp_path):
    bad = []
    for name, spec in REGISTRY.items():
        extra = SMALL + SMALL_PDMP.get(name, [])
        if spec.options.get("checkpoints"):
            extra += ["--set", "options.checkpoints=[100,200,300]"]
        first, second = tmp_path / name / "a", tmp_path / name / "b"
        assert cli.main(["run", name, "--out", str(first)] + extra) == 0
        assert cli.main(["run", str(first / "manifest.json"), "--out", str(second)]) == 0
        a, b = _csvs(first), _csvs(second)
        if not a or a != b:
            bad.append(name)
    ok = not bad
    record(13, "reruns from manifests reproduce CSVs", ok,
           f"{len(REGISTRY) - len(bad)}/{len(REGISTRY)} experiments identical")
    assert ok


# 14 ---------------------------------------------------------------------

_C14 = {}


def _horseshoe_acfs():
    if _C14:
        return _C14
    for name in ("fig22_mala_horseshoe", "fig22_transformed_mala_horseshoe"):
        _, _, traces = registry_traces(name)
        _C14[name] = ([dg.acf(t.positions[:, 0], 50).values[50] for t in traces],
                      all(np.all(np.isfinite(t.positions)) for t in traces))
    spec = REGISTRY["fig27_speedup_zz_horseshoe"]
    target = build_target(spec.target)
    p = spec.sampler["params"]
    acfs, finite = [], True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k in range(spec.n_replicates):
            tr = simulate_speedup_zz(target, SpeedFunction(p["k"]),
                                     PdmpConfig(n_events=None, max_evaluations=p["max_evaluations"],
                                                horizon=p["horizon"]),
                                     np.zeros(target.dim), RngStream(spec.root_seed, k))
            s = tr.samples(tr.original_times()[-1] / spec.options["grid_samples"], "original")
            finite &= bool(np.all(np.isfinite(s)))
            acfs.append(dg.acf(s[:, 0], 50).values[50])
    _C14["speedup_zz"] = (acfs, finite)
    return _C14


def test_criterion_14_horseshoe_traces_finite():
    assert all(finite for _, finite in _horseshoe_acfs().values())


@pytest.mark.xfail(strict=True, reason="speed-up Zig-Zag does not decorrelate fastest at an equal evaluation budget")
def test_criterion_14_horseshoe_ordering(record):
    res = _horseshoe_acfs()
    med = {k: float(np.median(v[0])) for k, v in res.items()}
    z, t, m = med["speedup_zz"], med["fig22_transformed_mala_horseshoe"], med["fig22_mala_horseshoe"]
    finite = all(f for _, f in res.values())
    ok = finite and z < t < m
    record(14, "horseshoe lag-50 autocorrelation ordering", ok,
           f"median lag-50 ACF: speed-up ZZ {z:.3f}, transformed MALA {t:.3f}, MALA {m:.3f}")
    assert ok

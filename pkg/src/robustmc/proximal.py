"""Moreau-Yosida envelopes, proximal operators and proximal Langevin kernels.

``U`` below is the potential ``-log pi``; targets flag convexity with
``target.convex`` and the proximal samplers refuse non-convex ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChainState, InitializationError, mh_accept, run_chain


class NotConvexError(ValueError):
    pass


class ProxConvergenceError(RuntimeError):
    def __init__(self, message, iterate, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.iterate = iterate
        self.residual = residual


@dataclass(frozen=True)
class ProxSpec:
    evaluator: str = "analytic"  # "analytic" falls back to numeric if the target has no prox
    tolerance: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if self.evaluator not in ("analytic", "numeric"):
            raise ValueError("evaluator must be analytic or numeric")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


DEFAULT_SPEC = ProxSpec()


def _require_convex(target):
    if not getattr(target, "convex", False):
        raise NotConvexError(f"{target.name} is not flagged convex; proximal samplers need a convex potential")


def _box_bounds(target):
    d = target.domain
    if d.kind == "box":
        return d.lower, d.upper
    return np.full(target.dim, -np.inf), np.full(target.dim, np.inf)


def _prox_separable(target, lam, x, spec: ProxSpec):
    """Coordinatewise safeguarded Newton/bisection on the monotone map
    y -> dU(y) + (y - x)/lam.  Handles kinks and box constraints."""
    lo_dom, hi_dom = _box_bounds(target)

    def dphi(y):
        return -target.gradient(y) + (y - x) / lam

    s = np.maximum(1.0, np.abs(x))
    a, b = x - s, x + s
    for _ in range(200):
        ga, gb = dphi(a), dphi(b)
        bad_a, bad_b = (ga > 0) & (a > lo_dom), (gb < 0) & (b < hi_dom)
        if not (bad_a.any() or bad_b.any()):
            break
        s = s * 2
        a = np.where(bad_a, x - s, a)
        b = np.where(bad_b, x + s, b)
    a, b = np.maximum(a, lo_dom), np.minimum(b, hi_dom)
    ga, gb = dphi(a), dphi(b)
    y = np.clip(x, a, b)
    done = np.zeros(x.size, bool)
    # minimizer pinned at a domain face
    at_lo, at_hi = ga >= 0, gb <= 0
    y = np.where(at_lo, a, np.where(at_hi, b, y))
    done |= at_lo | at_hi
    fd_step = 1e-7
    width = b - a
    for _ in range(spec.max_iters):
        g = dphi(y)
        conv = done | (np.abs(g) <= spec.tolerance) | (b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(y)))
        if conv.all():
            return y
        a = np.where(~conv & (g < 0), y, a)
        b = np.where(~conv & (g > 0), y, b)
        curv = (dphi(y + fd_step) - g) / fd_step
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = y - g / curv
        # Newton can creep towards a kink from one side; bisect when the bracket stalls
        stalled = (b - a) > 0.5 * width
        width = b - a
        ok = np.isfinite(newton) & (newton > a) & (newton < b) & (curv > 0) & ~stalled
        y = np.where(conv, y, np.where(ok, newton, 0.5 * (a + b)))
    res = float(np.max(np.abs(dphi(y))))
    raise ProxConvergenceError(f"numeric prox did not converge for {target.name}", y, res)


def _prox_smooth(target, lam, x, spec: ProxSpec):
    """Gradient descent with Armijo backtracking on U(y) + |y - x|^2 / (2 lam)."""

    def phi(y):
        u = -target.log_density(y)
        return u + float((y - x) @ (y - x)) / (2 * lam)

    def dphi(y):
        return -target.gradient(y) + (y - x) / lam

    y = x.copy()
    step = lam
    f, g = phi(y), dphi(y)
    for _ in range(spec.max_iters):
        gn = float(np.linalg.norm(g))
        if gn <= spec.tolerance:
            return y
        t = step
        while True:
            y_new = y - t * g
            f_new = phi(y_new)
            if f_new <= f - 0.5 * t * gn * gn or t < 1e-300:
                break
            t *= 0.5
        g_new = dphi(y_new)
        # Barzilai-Borwein guess for the next trial step
        sy = float((y_new - y) @ (g_new - g))
        step = float((y_new - y) @ (y_new - y)) / sy if sy > 0 else lam
        y, f, g = y_new, f_new, g_new
    raise ProxConvergenceError(f"numeric prox did not converge for {target.name}", y, float(np.linalg.norm(g)))


def numeric_prox(target, lam, x, spec: ProxSpec = DEFAULT_SPEC):
    x = np.atleast_1d(np.asarray(x, float))
    if target.dim == 1 or getattr(target, "separable", False):
        return _prox_separable(target, lam, x, spec)
    return _prox_smooth(target, lam, x, spec)


def prox(target, lam: float, x, spec: ProxSpec = DEFAULT_SPEC):
    """argmin_y U(y) + |x - y|^2 / (2 lam)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    x = np.atleast_1d(np.asarray(x, float))
    if spec.evaluator == "analytic" and target.has("prox"):
        return target.prox(lam, x)
    return numeric_prox(target, lam, x, spec)


def moreau_envelope(target, lam: float, x, spec: ProxSpec = DEFAULT_SPEC):
    """Value and gradient of the envelope ``U^lam`` at ``x``."""
    x = np.atleast_1d(np.asarray(x, float))
    p = prox(target, lam, x, spec)
    diff = x - p
    value = -target.log_density(p) + float(diff @ diff) / (2 * lam)
    return value, diff / lam


class SmoothedTarget:
    """Target with density proportional to ``exp(-U^lam)``."""

    convex = True
    extras = frozenset()

    def __init__(self, base, lam: float, spec: ProxSpec = DEFAULT_SPEC):
        from .targets import Domain
        _require_convex(base)
        self.base = base
        self.lam = float(lam)
        self.spec = spec
        self.dim = base.dim
        self.domain = Domain()
        self.name = f"{base.name}_envelope"
        self._cache_key = None
        self._cache = None

    def has(self, extra):
        return False

    def _eval(self, x):
        x = np.asarray(x, float)
        key = x.tobytes()
        if key != self._cache_key:
            self._cache = moreau_envelope(self.base, self.lam, x, self.spec)
            self._cache_key = key
        return self._cache

    def log_density(self, x):
        return -self._eval(x)[0]

    def gradient(self, x):
        return -self._eval(x)[1]

    def partial(self, i, x):
        return float(self.gradient(x)[i])


def _proximal_mean(target, x, lam, h, spec):
    if lam == h:
        return prox(target, h, x, spec)
    return x - (h / lam) * (x - prox(target, lam, x, spec))


def proximal_langevin_step(state: ChainState, target, lam: float, h: float, rng, adjusted=True,
                           spec: ProxSpec = DEFAULT_SPEC):
    _require_convex(target)
    x = state.position
    mean_x = _proximal_mean(target, x, lam, h, spec)
    y = mean_x + math.sqrt(2 * h) * rng.normal(x.size)
    lp_y = target.log_density(y) if target.domain.contains(y) else -math.inf
    if not adjusted:
        if not np.isfinite(lp_y):
            return state, False
        return ChainState(y, lp_y), True
    if not np.isfinite(lp_y):
        mh_accept(-math.inf, rng)
        return state, False
    mean_y = _proximal_mean(target, y, lam, h, spec)
    fwd, bwd = y - mean_x, x - mean_y
    log_ratio = lp_y - state.log_density - (bwd @ bwd - fwd @ fwd) / (4 * h)
    if mh_accept(float(log_ratio), rng):
        return ChainState(y, lp_y), True
    return state, False


def pula_step(state, target, lam, h, rng, spec: ProxSpec = DEFAULT_SPEC):
    return proximal_langevin_step(state, target, lam, h, rng, adjusted=False, spec=spec)


def pmala_step(state, target, lam, h, rng, spec: ProxSpec = DEFAULT_SPEC):
    return proximal_langevin_step(state, target, lam, h, rng, adjusted=True, spec=spec)


class ProximalLangevinKernel:
    def __init__(self, h: float, lam: float | None = None, adjusted: bool = True, spec: ProxSpec = DEFAULT_SPEC):
        if not h > 0:
            raise ValueError("step size must be positive")
        self.h = float(h)
        self.lam = float(h if lam is None else lam)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        self.adjusted = adjusted
        self.spec = spec

    def __call__(self, state, target, rng):
        return proximal_langevin_step(state, target, self.lam, self.h, rng, self.adjusted, self.spec)


def pmala(h, lam=None, spec=DEFAULT_SPEC):
    return ProximalLangevinKernel(h, lam, True, spec)


def pula(h, lam=None, spec=DEFAULT_SPEC):
    return ProximalLangevinKernel(h, lam, False, spec)


@dataclass(frozen=True)
class ThetaConfig:
    theta: float
    step_size: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if not self.step_size > 0:
            raise ValueError("step size must be positive")

    @property
    def theta_bar(self):
        return 1.0 - self.theta


def ila_step(state: ChainState, target, cfg: ThetaConfig, rng, spec: ProxSpec = DEFAULT_SPEC):
    """Theta-method step: explicit part on ``(1 - theta) h``, implicit part via
    the prox with ``lambda = theta h``.  ``theta = 0`` is exactly ULA."""
    h = cfg.step_size
    x = state.position
    g = state.ensure_gradient(target)
    xbar = x + h * cfg.theta_bar * g + math.sqrt(2 * h) * rng.normal(x.size)
    if cfg.theta > 0:
        _require_convex(target)
        xbar = prox(target, cfg.theta * h, xbar, spec)
    lp = target.log_density(xbar) if target.domain.contains(xbar) else -math.inf
    if not np.isfinite(lp):
        return state, False
    return ChainState(xbar, lp), True


class ThetaKernel:
    def __init__(self, cfg: ThetaConfig, spec: ProxSpec = DEFAULT_SPEC):
        self.cfg = cfg
        self.spec = spec

    def __call__(self, state, target, rng):
        return ila_step(state, target, self.cfg, rng, self.spec)


@dataclass
class WeightedSamples:
    positions: np.ndarray
    log_weights: np.ndarray
    trace: object = None

    @property
    def weights(self):
        w = np.exp(self.log_weights - np.max(self.log_weights))
        return w / w.sum()

    def weighted_mean(self, f=None):
        vals = self.positions if f is None else np.asarray([f(p) for p in self.positions])
        return np.tensordot(self.weights, vals, axes=1)

    def effective_size(self):
        w = self.weights
        return 1.0 / float(w @ w)


def smoothed_weighted_run(target, lam: float, kernel, n: int, rng, x0, spec: ProxSpec = DEFAULT_SPEC,
                          thin: int = 1) -> WeightedSamples:
    """Run ``kernel`` against the envelope-smoothed target and attach
    self-normalized importance weights ``exp(U^lam - U)``."""
    smooth = SmoothedTarget(target, lam, spec)
    x0 = np.atleast_1d(np.asarray(x0(rng) if callable(x0) else x0, float))
    if not np.isfinite(target.log_density(x0)):
        raise InitializationError("x0 must lie in the support of the original target")
    trace = run_chain(kernel, smooth, x0, n, rng, thin=thin, target_id=smooth.name)
    logw = np.array([target.log_density(p) if target.domain.contains(p) else -math.inf
                     for p in trace.positions]) - trace.log_density
    return WeightedSamples(trace.positions, logw, trace)

"""Piecewise-deterministic samplers: Zig-Zag, Bouncy Particle and the
speed-up (time-changed) Zig-Zag.

Event times come from an exact rate profile when the target supplies one
(``zz_rate_profile`` / ``bps_rate_profile``) and otherwise from thinning
against the target's ``grad_bound`` over a finite horizon.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

from .core import InitializationError, InvariantViolation


class RateBoundError(InvariantViolation):
    """A thinning majorant was exceeded by the true rate."""


class ImproperTiltWarning(UserWarning):
    pass


# ---------------------------------------------------------------- rate profiles

class PolynomialRate:
    """lambda(t) = max(0, p(t)) with ``p`` given by ascending coefficients."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, float))
        # a leading term 1e300 times smaller than the rest only matters past t ~ 1e150
        while c.size > 1 and np.max(np.abs(c[:-1])) > 1e300 * abs(c[-1]):
            c = c[:-1]
        self.coeffs = c if c.size else np.zeros(1)

    def rate(self, t):
        return np.maximum(0.0, P.polyval(t, self.coeffs))

    def _positive_intervals(self):
        c = self.coeffs
        deg = len(c) - 1
        if deg == 0:
            return [(0.0, math.inf)] if c[0] > 0 else []
        roots = np.roots(c[::-1])
        real = np.sort(roots[np.abs(roots.imag) <= 1e-10 * np.maximum(1.0, np.abs(roots))].real)
        cuts = [0.0] + [r for r in real if r > 0] + [math.inf]
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = a + max(1.0, abs(a)) if math.isinf(b) else 0.5 * (a + b)
            if P.polyval(mid, c) > 0:
                if out and out[-1][1] == a:
                    out[-1] = (out[-1][0], b)
                else:
                    out.append((a, b))
        return out

    def _local_anti(self, a):
        """Antiderivative of s -> p(a + s) vanishing at s = 0.  Expanding about
        the interval start avoids cancellation when a is large."""
        shifted = np.polynomial.Polynomial(self.coeffs)(np.polynomial.Polynomial([a, 1.0])).coef
        return P.polyint(shifted)

    def integrated(self, t):
        total = 0.0
        for a, b in self._positive_intervals():
            if a >= t:
                break
            total += P.polyval(min(b, t) - a, self._local_anti(a))
        return total

    def invert(self, E: float) -> float:
        c = self.coeffs
        if len(c) == 1:
            return E / c[0] if c[0] > 0 else math.inf
        if len(c) == 2:
            return _invert_affine(c[0], c[1], E)
        remaining = E
        for a, b in self._positive_intervals():
            anti = self._local_anti(a)
            if not math.isinf(b):
                mass = P.polyval(b - a, anti)
                if mass < remaining:
                    remaining -= mass
                    continue
            # grow the bracket from the left end so brentq never sees a huge interval
            width = b - a
            step = max(1.0, abs(a))
            hi = min(width, step)
            while True:
                gained = P.polyval(hi, anti)
                if not math.isfinite(gained):
                    return math.inf  # overflow: the event lies beyond any representable time
                if gained >= remaining:
                    break
                if hi == width or step > 1e300:
                    return b if hi == width else math.inf
                step *= 2
                hi = min(width, step)
            # disp=False: for roots near 1e90 float time itself has no resolution left
            s = optimize.brentq(lambda u: P.polyval(u, anti) - remaining, 0.0, hi,
                                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500, disp=False)
            return a + s
        return math.inf


def _invert_affine(a: float, b: float, E: float) -> float:
    """Solve int_0^t max(0, a + b s) ds = E."""
    if b == 0:
        return E / a if a > 0 else math.inf
    if b > 0:
        if a >= 0:
            return 2 * E / (a + math.sqrt(a * a + 2 * b * E))
        return -a / b + math.sqrt(2 * E / b)
    if a <= 0 or E > a * a / (-2 * b):
        return math.inf
    return 2 * E / (a + math.sqrt(max(0.0, a * a + 2 * b * E)))


class PiecewiseConstantRate:
    def __init__(self, breaks, values):
        self.breaks = np.asarray(breaks, float)
        self.values = np.asarray(values, float)

    def rate(self, t):
        return self.values[np.searchsorted(self.breaks, t, side="right") - 1]

    def invert(self, E: float) -> float:
        remaining = E
        ends = np.append(self.breaks[1:], math.inf)
        for a, b, c in zip(self.breaks, ends, self.values):
            if c <= 0:
                continue
            if c * (b - a) >= remaining:
                return a + remaining / c
            remaining -= c * (b - a)
        return math.inf


class LogQuadraticRate:
    """lambda(t) = max(0, 2 g (a + t) / (1 + (a + t)^2)), the Zig-Zag rate of
    pi ~ (1 + x^2)^(-g) in one dimension with ``a = v x``."""

    def __init__(self, gamma: float, a: float):
        self.gamma = gamma
        self.a = a

    def rate(self, t):
        y = self.a + np.asarray(t, float)
        return np.maximum(0.0, 2 * self.gamma * y / (1 + y * y))

    def invert(self, E: float) -> float:
        a = self.a
        if self.gamma <= 0:
            return math.inf
        growth = math.exp(E / self.gamma)
        if a >= 0:
            return math.sqrt((1 + a * a) * growth - 1) - a
        return -a + math.sqrt(growth - 1)


class ThinnedRate:
    """Rate known pointwise with a majorant valid on windows of length
    ``horizon``.  ``bound(t0)`` returns a constant ``c`` or affine ``(c0, c1)``
    (in the time since ``t0``) dominating ``rate`` on ``[t0, t0 + horizon]``."""

    def __init__(self, rate, bound, horizon: float, name: str = "target"):
        self.rate = rate
        self.bound = bound
        self.horizon = float(horizon)
        self.name = name
        self.proposals = 0

    def sample(self, rng, t_max: float = math.inf) -> float:
        t0 = 0.0
        while t0 < t_max:
            b = self.bound(t0)
            c0, c1 = (b, 0.0) if np.isscalar(b) else b
            s = 0.0
            while True:
                s = s + _invert_affine(c0 + c1 * s, c1, rng.exponential())
                if s > self.horizon:
                    break
                self.proposals += 1
                lam = float(self.rate(t0 + s))
                maj = c0 + c1 * s
                if lam > maj * (1 + 1e-9) + 1e-12:
                    raise RateBoundError(f"thinning bound violated for {self.name}: rate {lam:.6g} > bound {maj:.6g}")
                if rng.uniform() * maj < lam:
                    return t0 + s
            t0 += self.horizon
        return math.inf


def next_event_time(profile, rng) -> float:
    """First event time of a Poisson process with the given rate profile."""
    if isinstance(profile, ThinnedRate):
        return profile.sample(rng)
    return profile.invert(rng.exponential())


# ------------------------------------------------------------------ rates

def zz_rate(target, x, v, i: int) -> float:
    return max(0.0, -v[i] * target.partial(i, x))


def bps_rate(target, x, v) -> float:
    return max(0.0, -float(np.dot(v, target.gradient(x))))


def bps_reflect(grad, v):
    g = np.asarray(grad, float)
    gg = float(g @ g)
    if gg == 0.0:
        raise InvariantViolation("bounce at a point with zero gradient")
    return v - 2.0 * (float(g @ v) / gg) * g


# ------------------------------------------------------------ trajectories

@dataclass(frozen=True)
class SpeedFunction:
    """s(x) = (1 + |x|^2)^((1+k)/2); ``k = None`` means s = 1."""

    k: Optional[int] = 0

    def __post_init__(self):
        if self.k is not None and self.k < 0:
            raise ValueError("k must be a non-negative integer")

    @property
    def exponent(self) -> float:
        return 0.0 if self.k is None else 0.5 * (1 + self.k)

    def __call__(self, x) -> float:
        return (1.0 + float(np.dot(x, x))) ** self.exponent

    def log(self, x) -> float:
        return self.exponent * math.log1p(float(np.dot(x, x)))

    def grad_log(self, x):
        x = np.asarray(x, float)
        return 2 * self.exponent * x / (1.0 + np.dot(x, x))


@dataclass
class PdmpTrajectory:
    """Event skeleton.  ``velocities[k]`` is the velocity on the segment that
    starts at ``times[k]``; the last row closes the trajectory."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    evaluations: np.ndarray
    n_switches: int = 0
    speed: Optional[SpeedFunction] = None
    meta: dict = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return float(self.times[-1])

    @property
    def skeleton(self):
        return list(zip(self.times, self.positions, self.velocities))

    @property
    def dim(self):
        return self.positions.shape[1]

    def durations(self):
        return np.diff(self.times)

    def _segment_quadratic(self):
        y0, v = self.positions[:-1], self.velocities[:-1]
        a = np.einsum("ij,ij->i", v, v)
        b = 2 * np.einsum("ij,ij->i", y0, v)
        c = 1 + np.einsum("ij,ij->i", y0, y0)
        return a, b, c

    def _clock_antiderivative(self, u):
        """W_j(u) = int_0^u ds / s(y_j + s v_j), vectorized over segments."""
        if self.speed is None or self.speed.k is None:
            return np.asarray(u, float) * np.ones(len(self.times) - 1)
        a, b, c = self._segment_quadratic()
        D = np.sqrt(np.maximum(4 * a * c - b * b, 1e-300))
        u = np.asarray(u, float)
        if self.speed.k == 0:
            sa = np.sqrt(a)
            return (np.arcsinh((2 * a * u + b) / D) - np.arcsinh(b / D)) / sa
        if self.speed.k == 1:
            return 2 / D * (np.arctan((2 * a * u + b) / D) - np.arctan(b / D))
        out = np.empty(a.size)
        ex = self.speed.exponent
        uu = np.broadcast_to(u, a.shape)
        for j in range(a.size):
            val, err = integrate.quad(lambda s: (a[j] * s * s + b[j] * s + c[j]) ** (-ex), 0.0, uu[j],
                                      epsabs=1e-13, epsrel=1e-11, limit=200)
            if err > 1e-8 * max(1.0, abs(val)):
                raise InvariantViolation(f"clock quadrature failed on segment {j}: y0={self.positions[j]}, "
                                         f"v={self.velocities[j]}, tau={uu[j]}")
            out[j] = val
        return out

    def segment_weights(self) -> np.ndarray:
        """Original-clock duration of each segment (process duration when s = 1)."""
        return self._clock_antiderivative(self.durations())

    def original_times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_weights())])

    def _invert_clock(self, j, w):
        """Process-time offset u within segment j whose clock integral is w."""
        if self.speed is None or self.speed.k is None:
            return w
        a, b, c = (q[j] for q in self._segment_quadratic())
        D = math.sqrt(max(4 * a * c - b * b, 1e-300))
        if self.speed.k == 0:
            return (D * math.sinh(math.sqrt(a) * w + math.asinh(b / D)) - b) / (2 * a)
        if self.speed.k == 1:
            return (D * math.tan(0.5 * D * w + math.atan(b / D)) - b) / (2 * a)
        tau = self.times[j + 1] - self.times[j]
        ex = self.speed.exponent
        return optimize.brentq(
            lambda u: integrate.quad(lambda s: (a * s * s + b * s + c) ** (-ex), 0.0, u)[0] - w, 0.0, tau)

    def samples(self, delta: float, clock: str = "process") -> np.ndarray:
        return trajectory_to_samples(self, delta, clock)

    def time_average(self):
        """Mean and second-moment matrix of the process-clock time average."""
        tau = self.durations()
        x0, v = self.positions[:-1], self.velocities[:-1]
        T = tau.sum()
        m = (x0 * tau[:, None] + v * (tau ** 2 / 2)[:, None]).sum(0) / T
        s2 = (np.einsum("k,ki,kj->ij", tau, x0, x0)
              + np.einsum("k,ki,kj->ij", tau ** 2 / 2, x0, v) + np.einsum("k,ki,kj->ij", tau ** 2 / 2, v, x0)
              + np.einsum("k,ki,kj->ij", tau ** 3 / 3, v, v)) / T
        return m, s2

    def tail_integrals(self, coordinate: int, threshold: float):
        """Per-segment (clock-weighted) time spent with x_c >= threshold."""
        tau = self.durations()
        y0 = self.positions[:-1, coordinate]
        vc = self.velocities[:-1, coordinate]
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = (threshold - y0) / vc
        lo = np.where(vc > 0, np.clip(cross, 0, tau), np.where(vc < 0, 0.0, np.where(y0 >= threshold, 0.0, tau)))
        hi = np.where(vc > 0, tau, np.where(vc < 0, np.clip(cross, 0, tau), tau))
        return self._clock_antiderivative(hi) - self._clock_antiderivative(lo)

    def running_tail_estimate(self, coordinate: int, threshold: float):
        """Cumulative tail-fraction estimates after each segment (ratio of
        clock-weighted indicator integral to total clock)."""
        num = np.cumsum(self.tail_integrals(coordinate, threshold))
        den = np.cumsum(self.segment_weights())
        return num / den

    def weighted_average(self, f, n_nodes: int = 16):
        """Ratio estimator sum_seg int f/s / sum_seg int 1/s via Gauss-Legendre
        nodes on each segment."""
        nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
        tau = self.durations()
        y0, v = self.positions[:-1], self.velocities[:-1]
        u = 0.5 * (nodes[None, :] + 1) * tau[:, None]
        pts = y0[:, None, :] + u[..., None] * v[:, None, :]
        fv = np.apply_along_axis(f, -1, pts)
        if self.speed is None or self.speed.k is None:
            inv_s = np.ones_like(u)
        else:
            inv_s = (1 + np.einsum("kni,kni->kn", pts, pts)) ** (-self.speed.exponent)
        w = 0.5 * tau[:, None] * wts[None, :] * inv_s
        num = ((w[..., None] if fv.ndim == 3 else w) * fv).sum(axis=(0, 1))
        return num / self.segment_weights().sum()

    def to_csv(self, path):
        d = self.dim
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + [f"v{i + 1}" for i in range(d)])
            for t, x, v in zip(self.times, self.positions, self.velocities):
                w.writerow([f"{t:.17g}"] + [f"{q:.17g}" for q in x] + [f"{q:.17g}" for q in v])


def trajectory_to_samples(traj: PdmpTrajectory, delta: float, clock: str = "process") -> np.ndarray:
    """Positions at times 0, delta, 2 delta, ... on the process clock, or on the
    original clock of a speed-up trajectory (``clock="original"``)."""
    if not delta > 0:
        raise ValueError("grid spacing must be positive")
    if clock == "process":
        knots = traj.times
    elif clock == "original":
        knots = traj.original_times()
    else:
        raise ValueError("clock must be process or original")
    grid = np.arange(0.0, knots[-1] * (1 + 1e-15) + 1e-300, delta)
    grid = grid[grid <= knots[-1]]
    seg = np.clip(np.searchsorted(knots, grid, side="right") - 1, 0, len(knots) - 2)
    off = grid - knots[seg]
    if clock == "original" and traj.speed is not None and traj.speed.k is not None:
        off = np.array([traj._invert_clock(j, w) for j, w in zip(seg, off)])
    return traj.positions[seg] + off[:, None] * traj.velocities[seg]


# ---------------------------------------------------------------- simulation

@dataclass(frozen=True)
class PdmpConfig:
    n_events: Optional[int] = 10_000       # velocity changes (flips, bounces, refreshes, wall hits)
    total_time: Optional[float] = None
    max_evaluations: Optional[int] = None  # gradient/partial evaluations, including thinning rejections
    refresh_rate: float = 0.0
    horizon: float = 1.0                   # thinning window
    mode: str = "auto"                     # auto | exact | thinning
    velocity: str = "gaussian"             # BPS velocity law: gaussian | sphere

    def __post_init__(self):
        if self.n_events is None and self.total_time is None and self.max_evaluations is None:
            raise ValueError("need at least one of n_events, total_time, max_evaluations")
        if self.refresh_rate < 0 or not self.horizon > 0:
            raise ValueError("refresh rate must be >= 0 and horizon > 0")
        if self.mode not in ("auto", "exact", "thinning"):
            raise ValueError("mode must be auto, exact or thinning")
        if self.velocity not in ("gaussian", "sphere"):
            raise ValueError("velocity must be gaussian or sphere")


class _Recorder:
    def __init__(self, t, x, v):
        self.t, self.x, self.v, self.e = [t], [x.copy()], [v.copy()], [0]
        self.switches = 0
        self.evals = 0

    def add(self, t, x, v, switch=True):
        self.t.append(t)
        self.x.append(x.copy())
        self.v.append(v.copy())
        self.e.append(self.evals)
        self.switches += switch

    def done(self, cfg, t):
        if cfg.n_events is not None and self.switches >= cfg.n_events:
            return True
        if cfg.max_evaluations is not None and self.evals >= cfg.max_evaluations:
            return True
        return cfg.total_time is not None and t >= cfg.total_time

    def build(self, speed=None, **meta):
        return PdmpTrajectory(np.array(self.t), np.array(self.x), np.array(self.v), np.array(self.e),
                              self.switches, speed, meta)


def _check_start(target, x0):
    x = np.atleast_1d(np.asarray(x0, float)).copy()
    if x.shape != (target.dim,) or not target.domain.contains(x) or not np.isfinite(target.log_density(x)):
        raise InitializationError(f"x0 = {x0} is outside the domain of {target.name}")
    return x


def _use_exact(target, cfg, kind):
    hook = "zz_rate_profile" if kind == "zz" else "bps_rate_profile"
    has = target.has(hook)
    if cfg.mode == "exact" and not has:
        raise ValueError(f"{target.name} has no exact {kind} rate profile")
    if cfg.mode == "thinning" and not target.has("grad_bound"):
        raise ValueError(f"{target.name} has no gradient bound for thinning")
    if cfg.mode == "auto" and not has and not target.has("grad_bound"):
        raise ValueError(f"{target.name} supports neither exact event times nor thinning")
    return cfg.mode == "exact" or (cfg.mode == "auto" and has)


def _advance(x, v, dt, domain, wall_index=-1):
    x = x + dt * v
    if domain.kind == "box" and wall_index >= 0:
        x[wall_index] = domain.upper[wall_index] if v[wall_index] > 0 else domain.lower[wall_index]
    return x


def simulate_zz(target, cfg: PdmpConfig, x0, rng, v0=None, speed: SpeedFunction | None = None) -> PdmpTrajectory:
    """Zig-Zag process.  All clocks are redrawn after every state change, which
    is exact by memorylessness of the competing Poisson clocks."""
    x = _check_start(target, x0)
    d = x.size
    v = np.where(rng.uniform(d) < 0.5, -1.0, 1.0) if v0 is None else np.asarray(v0, float).copy()
    if not np.all(np.abs(v) == 1.0):
        raise ValueError("Zig-Zag velocities must lie in {-1, +1}^d")
    exact = _use_exact(target, cfg, "zz")
    rec = _Recorder(0.0, x, v)
    t = 0.0
    n_bounds = 0
    while not rec.done(cfg, t):
        t_wall, i_wall = target.domain.boundary_hit(x, v)
        t_ref = rng.exponential() / cfg.refresh_rate if cfg.refresh_rate > 0 else math.inf
        t_stop = cfg.total_time - t if cfg.total_time is not None else math.inf
        if exact:
            taus = np.array([target.zz_rate_profile(x, v, i).invert(rng.exponential()) for i in range(d)])
            i_rate = int(np.argmin(taus))
            t_rate, bound = taus[i_rate], None
        else:
            bound = np.asarray(target.zz_rate_bound(x, v, cfg.horizon), float)
            n_bounds += 1
            total = bound.sum()
            t_rate = rng.exponential() / total if total > 0 else math.inf
            if t_rate > cfg.horizon:
                t_rate = math.inf
        t_next = min(t_rate, t_wall, t_ref, t_stop, cfg.horizon if not exact else math.inf)
        if math.isinf(t_next):
            raise InvariantViolation(f"Zig-Zag on {target.name} has no further events")
        if t_next == t_stop:
            x = _advance(x, v, t_next, target.domain)
            t = cfg.total_time
            rec.add(t, x, v, switch=False)
            break
        if t_next == t_wall:
            x = _advance(x, v, t_next, target.domain, i_wall)
            t += t_next
            v[i_wall] = -v[i_wall]
            rec.add(t, x, v)
        elif t_next == t_ref:
            x = _advance(x, v, t_next, target.domain)
            t += t_next
            v = np.where(rng.uniform(d) < 0.5, -1.0, 1.0)
            rec.add(t, x, v)
        elif t_next == t_rate:
            x = _advance(x, v, t_next, target.domain)
            t += t_next
            if exact:
                rec.evals += 1
                v[i_rate] = -v[i_rate]
                rec.add(t, x, v)
            else:
                i = int(rng.generator.choice(d, p=bound / total))
                lam = max(0.0, -v[i] * target.partial(i, x))
                rec.evals += 1
                if lam > bound[i] * (1 + 1e-9) + 1e-12:
                    raise RateBoundError(f"Zig-Zag rate bound violated for {target.name} "
                                         f"(coordinate {i}: rate {lam:.6g} > bound {bound[i]:.6g})")
                if rng.uniform() * bound[i] < lam:
                    v[i] = -v[i]
                    rec.add(t, x, v)
        else:  # thinning window expired
            x = _advance(x, v, t_next, target.domain)
            t += t_next
    if rec.t[-1] != t:
        rec.add(t, x, v, switch=False)
    return rec.build(speed, sampler="zz", exact=exact, bound_evaluations=n_bounds,
                     evaluations=rec.evals)


def _bps_velocity(rng, d, law):
    v = rng.normal(d)
    return v / np.linalg.norm(v) if law == "sphere" else v


def simulate_bps(target, cfg: PdmpConfig, x0, rng, v0=None) -> PdmpTrajectory:
    x = _check_start(target, x0)
    d = x.size
    v = _bps_velocity(rng, d, cfg.velocity) if v0 is None else np.asarray(v0, float).copy()
    exact = _use_exact(target, cfg, "bps")
    rec = _Recorder(0.0, x, v)
    t = 0.0
    n_bounds = 0
    while not rec.done(cfg, t):
        t_wall, i_wall = target.domain.boundary_hit(x, v)
        t_ref = rng.exponential() / cfg.refresh_rate if cfg.refresh_rate > 0 else math.inf
        t_stop = cfg.total_time - t if cfg.total_time is not None else math.inf
        if exact:
            t_rate, bound = target.bps_rate_profile(x, v).invert(rng.exponential()), None
        else:
            bound = float(np.abs(v) @ target.grad_bound(x, v, cfg.horizon))
            n_bounds += 1
            t_rate = rng.exponential() / bound if bound > 0 else math.inf
            if t_rate > cfg.horizon:
                t_rate = math.inf
        t_next = min(t_rate, t_wall, t_ref, t_stop, cfg.horizon if not exact else math.inf)
        if math.isinf(t_next):
            raise InvariantViolation(f"BPS on {target.name} has no further events; add refreshment")
        if t_next == t_stop:
            x = _advance(x, v, t_next, target.domain)
            t = cfg.total_time
            rec.add(t, x, v, switch=False)
            break
        if t_next == t_wall:
            x = _advance(x, v, t_next, target.domain, i_wall)
            t += t_next
            v[i_wall] = -v[i_wall]
            rec.add(t, x, v)
        elif t_next == t_ref:
            x = _advance(x, v, t_next, target.domain)
            t += t_next
            v = _bps_velocity(rng, d, cfg.velocity)
            rec.add(t, x, v)
        elif t_next == t_rate:
            x = _advance(x, v, t_next, target.domain)
            t += t_next
            g = np.asarray(target.gradient(x), float)
            rec.evals += 1
            lam = max(0.0, -float(v @ g))
            if exact or _thin_accept(lam, bound, rng, target):
                v = bps_reflect(g, v)
                rec.add(t, x, v)
        else:
            x = _advance(x, v, t_next, target.domain)
            t += t_next
    if rec.t[-1] != t:
        rec.add(t, x, v, switch=False)
    return rec.build(None, sampler="bps", exact=exact, bound_evaluations=n_bounds, evaluations=rec.evals)


def _thin_accept(lam, bound, rng, target):
    if lam > bound * (1 + 1e-9) + 1e-12:
        raise RateBoundError(f"BPS rate bound violated for {target.name}: rate {lam:.6g} > bound {bound:.6g}")
    return rng.uniform() * bound < lam


# ---------------------------------------------------------------- speed-up Zig-Zag

class TiltedTarget:
    """Density proportional to ``s(x) pi(x)`` for a speed function ``s``."""

    def __init__(self, base, speed: SpeedFunction):
        self.base = base
        self.speed = speed
        self.dim = base.dim
        self.domain = base.domain
        self.name = f"{base.name}_tilted"
        self.extras = frozenset({"grad_bound"}) if base.has("grad_bound") else frozenset()

    def has(self, extra):
        return extra in self.extras

    def log_density(self, x):
        return self.base.log_density(x) + self.speed.log(x)

    def gradient(self, x):
        return np.asarray(self.base.gradient(x), float) + self.speed.grad_log(x)

    def partial(self, i, x):
        return float(self.gradient(x)[i])

    def grad_bound(self, x, v, horizon):
        # |2e y_i / (1 + |y|^2)| <= e
        return np.asarray(self.base.grad_bound(x, v, horizon), float) + self.speed.exponent

    def zz_rate_bound(self, x, v, horizon):
        return self.grad_bound(x, v, horizon) * np.abs(v)


def tilted_target(base, speed: SpeedFunction):
    """Base target for the speed-up process; power-radial laws stay in their
    family (keeping exact event times in one dimension)."""
    from .targets import PowerRadial
    if speed.k is None:
        return base
    if isinstance(base, PowerRadial):
        tilted = PowerRadial(base.dim, base.gamma - speed.exponent)
        tilted.name = f"{base.name}_tilted"
        if not tilted.normalizable:
            warnings.warn(f"s * pi is not normalizable for {base.name} with k={speed.k}; only ratio "
                          "estimators of the time-changed process are meaningful", ImproperTiltWarning,
                          stacklevel=3)
        return tilted
    return TiltedTarget(base, speed)


def simulate_speedup_zz(target, speed: SpeedFunction, cfg: PdmpConfig, x0, rng, v0=None) -> PdmpTrajectory:
    """Zig-Zag on the tilted target; the returned trajectory carries the speed
    so that clock weights and original-clock samples can be derived."""
    base = tilted_target(target, speed)
    traj = simulate_zz(base, cfg, x0, rng, v0, speed=None if speed.k is None else speed)
    traj.meta["sampler"] = "speedup_zz"
    traj.meta["speed_k"] = speed.k
    return traj


def weighted_time_average(traj: PdmpTrajectory, f=None):
    """E_pi[f] estimated by sum int f/s / sum int 1/s over segments."""
    if f is None:
        return traj.weighted_average(lambda y: y)
    return traj.weighted_average(f)

"""Hamiltonian kernels with general kinetic energies and exact randomized HMC
for Gaussian targets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import optimize

from .core import ChainState, InvariantViolation, Trace, mh_accept


class TrajectoryDivergence(ArithmeticError):
    pass


class KineticEnergy:
    name = "kinetic"
    supports_partial_refresh = False

    def value(self, v) -> float:
        raise NotImplementedError

    def grad(self, v) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng, dim: int) -> np.ndarray:
        raise NotImplementedError


class GaussianKE(KineticEnergy):
    name = "gaussian"
    supports_partial_refresh = True

    def value(self, v):
        return 0.5 * float(np.dot(v, v))

    def grad(self, v):
        return np.asarray(v, float)

    def sample(self, rng, dim):
        return rng.normal(dim)


class RelativisticKE(KineticEnergy):
    """K(v) = (1 + |v|^2)^(a/2) - 1, sampled by rejection from a Student-t(3)
    envelope whose bounding constant is found numerically per dimension."""

    name = "relativistic"
    dof = 3.0

    def __init__(self, a: float = 1.0):
        if a < 1:
            raise ValueError("relativistic exponent must satisfy a >= 1")
        self.a = float(a)

    def value(self, v):
        return (1.0 + float(np.dot(v, v))) ** (0.5 * self.a) - 1.0

    def grad(self, v):
        v = np.asarray(v, float)
        return self.a * (1.0 + np.dot(v, v)) ** (0.5 * self.a - 1.0) * v

    def _log_ratio(self, r, dim):
        return -((1.0 + r * r) ** (0.5 * self.a) - 1.0) + 0.5 * (self.dof + dim) * math.log1p(r * r / self.dof)

    @lru_cache(maxsize=None)
    def envelope_constant(self, dim: int) -> float:
        grid = np.linspace(0.0, 50.0 + 10 * dim, 4001)
        vals = np.array([self._log_ratio(r, dim) for r in grid])
        j = int(np.argmax(vals))
        lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
        res = optimize.minimize_scalar(lambda r: -self._log_ratio(r, dim), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        best = max(vals[j], -res.fun)
        if not np.isfinite(best) or vals[-1] > best - 10:
            raise ValueError("Student-t envelope does not dominate the relativistic law")
        return float(best) + 1e-9

    def sample(self, rng, dim):
        m = self.envelope_constant(dim)
        while True:
            z = rng.normal(dim) / math.sqrt(2.0 * rng.generator.standard_gamma(0.5 * self.dof) / self.dof)
            if math.log(rng.uniform()) < self._log_ratio(float(np.linalg.norm(z)), dim) - m:
                return z


class PowerKE(KineticEnergy):
    """K(v) = sum_i |v_i|^p."""

    name = "power"

    def __init__(self, p: float = 4.0 / 3.0):
        if not p > 1:
            raise ValueError("power kinetic energy needs p > 1")
        self.p = float(p)

    def value(self, v):
        return float(np.sum(np.abs(v) ** self.p))

    def grad(self, v):
        v = np.asarray(v, float)
        return self.p * np.abs(v) ** (self.p - 1) * np.sign(v)

    def sample(self, rng, dim):
        mag = rng.generator.standard_gamma(1.0 / self.p, dim) ** (1.0 / self.p)
        return np.where(rng.uniform(dim) < 0.5, -mag, mag)


class LaplaceKE(KineticEnergy):
    """K(v) = |v|_1; the drift moves every coordinate by exactly +-h."""

    name = "laplace"

    def value(self, v):
        return float(np.sum(np.abs(v)))

    def grad(self, v):
        return np.sign(np.asarray(v, float))

    def sample(self, rng, dim):
        return rng.generator.laplace(size=dim)


def kinetic_energy(name: str, **params) -> KineticEnergy:
    table = {"gaussian": GaussianKE, "relativistic": RelativisticKE, "power": PowerKE, "laplace": LaplaceKE}
    try:
        return table[name](**params)
    except KeyError:
        raise ValueError(f"unknown kinetic energy {name!r}") from None


def sample_kinetic(K: KineticEnergy, dim: int, rng) -> np.ndarray:
    return K.sample(rng, dim)


def _leapfrog(x, v, h, L, target, K, grad=None):
    x = np.array(x, float)
    v = np.array(v, float)
    g = np.asarray(target.gradient(x) if grad is None else grad, float)
    for _ in range(L):
        v += 0.5 * h * g
        x += h * K.grad(v)
        if not target.domain.contains(x):
            raise TrajectoryDivergence("trajectory left the target domain")
        g = np.asarray(target.gradient(x), float)
        v += 0.5 * h * g
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise TrajectoryDivergence("non-finite state in leapfrog")
    return x, v, g


def leapfrog(x, v, h: float, L: int, target, K: KineticEnergy):
    """L steps of kick(h/2) - drift(h) - kick(h/2)."""
    x, v, _ = _leapfrog(x, v, h, L, target, K)
    return x, v


@dataclass(frozen=True)
class HmcConfig:
    step_size: float
    n_leapfrog: Optional[int] = 10
    traj_rate: Optional[float] = None
    refresh_corr: float = 0.0

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step size must be positive")
        if self.traj_rate is None and (self.n_leapfrog is None or self.n_leapfrog < 1):
            raise ValueError("need n_leapfrog >= 1 or a trajectory rate")
        if self.traj_rate is not None and not self.traj_rate > 0:
            raise ValueError("trajectory rate must be positive")
        if not -1.0 <= self.refresh_corr <= 1.0:
            raise ValueError("refresh correlation must lie in [-1, 1]")

    def draw_length(self, rng) -> int:
        if self.traj_rate is None:
            return int(self.n_leapfrog)
        return max(1, int(rng.generator.poisson(self.traj_rate / self.step_size)))


def hmc_step(state: ChainState, target, K: KineticEnergy, cfg: HmcConfig, rng):
    """One Metropolised HMC transition.  With partial refresh the velocity is
    carried in ``state.aux`` and negated on rejection."""
    rho = cfg.refresh_corr
    if rho != 0.0 and not K.supports_partial_refresh:
        raise ValueError(f"partial refresh is only valid for the Gaussian kinetic energy, not {K.name}")
    L = cfg.draw_length(rng)
    d = state.position.size
    fresh = K.sample(rng, d)
    if rho != 0.0 and state.aux is not None:
        v = rho * state.aux + math.sqrt(1.0 - rho * rho) * fresh
    else:
        v = fresh
    g = state.ensure_gradient(target)
    h0 = -state.log_density + K.value(v)
    try:
        x1, v1, g1 = _leapfrog(state.position, v, cfg.step_size, L, target, K, g)
        lp1 = target.log_density(x1)
        log_ratio = h0 - (-lp1 + K.value(v1))
        if not np.isfinite(log_ratio):
            raise TrajectoryDivergence("non-finite energy")
    except TrajectoryDivergence:
        mh_accept(-math.inf, rng)
        return ChainState(state.position, state.log_density, state.gradient, -v if rho else None), False
    if mh_accept(log_ratio, rng):
        return ChainState(x1, lp1, g1, v1 if rho else None), True
    return ChainState(state.position, state.log_density, state.gradient, -v if rho else None), False


class HmcKernel:
    def __init__(self, cfg: HmcConfig, K: KineticEnergy | None = None):
        self.cfg = cfg
        self.K = K or GaussianKE()
        if cfg.refresh_corr != 0.0 and not self.K.supports_partial_refresh:
            raise ValueError(f"partial refresh is only valid for the Gaussian kinetic energy, not {self.K.name}")

    def __call__(self, state, target, rng):
        return hmc_step(state, target, self.K, self.cfg, rng)


def hamiltonian(target, K: KineticEnergy, x, v) -> float:
    return -target.log_density(x) + K.value(v)


class GaussianFlow:
    """Exact flow of x' = v, v' = -C^{-1} x in the eigenbasis of C."""

    def __init__(self, C):
        C = np.atleast_2d(np.asarray(C, float))
        vals, vecs = np.linalg.eigh(C)
        if np.any(vals <= 0):
            raise ValueError("covariance must be positive definite")
        self.C = C
        self.Q = vecs
        self.omega = 1.0 / np.sqrt(vals)
        self.precision = np.linalg.inv(C)

    def advance(self, x, v, t):
        y, w = self.Q.T @ x, self.Q.T @ v
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        y1 = y * c + w / self.omega * s
        w1 = -y * self.omega * s + w * c
        return self.Q @ y1, self.Q @ w1

    def energy(self, x, v):
        return 0.5 * float(x @ self.precision @ x) + 0.5 * float(v @ v)


def rhmc_exact_gaussian(C, rho: float, lam_refresh: float, n_events: int, x0, rng, v0=None) -> Trace:
    """Randomized HMC with exact Gaussian dynamics; the trace holds the state
    at each refreshment event (record 0 is the start)."""
    if not lam_refresh > 0:
        raise ValueError("refresh rate must be positive")
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    flow = GaussianFlow(C)
    d = flow.C.shape[0]
    x = np.array(x0, float)
    v = rng.normal(d) if v0 is None else np.array(v0, float)
    pos = np.empty((n_events + 1, d))
    lps = np.empty(n_events + 1)
    times = np.empty(n_events + 1)
    pos[0], lps[0], times[0] = x, -0.5 * float(x @ flow.precision @ x), 0.0
    t = 0.0
    drift = 0.0
    for k in range(1, n_events + 1):
        tau = rng.exponential() / lam_refresh
        e0 = flow.energy(x, v)
        x, v = flow.advance(x, v, tau)
        drift = max(drift, abs(flow.energy(x, v) - e0) / max(1.0, abs(e0)))
        v = rho * v + math.sqrt(1.0 - rho * rho) * rng.normal(d)
        t += tau
        pos[k], lps[k], times[k] = x, -0.5 * float(x @ flow.precision @ x), t
    if drift > 1e-8:
        raise InvariantViolation(f"exact Gaussian flow drifted in energy by {drift:.3e}")
    return Trace(pos, np.ones(n_events + 1, bool), lps, np.arange(n_events + 1), "gaussian", "rhmc_exact",
                 rng.root_seed, rng.stream_index, n_events, n_events, 1,
                 {"event_times": times, "max_relative_energy_drift": drift})

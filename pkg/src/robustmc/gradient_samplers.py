"""Langevin-type kernels (ULA, MALA, drift truncation, taming) and the Barker proposal.

Langevin proposals use ``y = x + h m(grad log pi(x)) + sqrt(2h) xi`` where ``m``
is the drift modifier; the Metropolis correction uses the matching Gaussian
proposal density with the same modifier at both endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import ChainState, mh_accept

DRIFTS = ("identity", "truncate", "tame")


def log_sigmoid(t):
    """log(1 / (1 + exp(-t))) without overflow."""
    return -np.logaddexp(0.0, -np.asarray(t, float))


def truncate_drift(g, R: float):
    if not R > 0:
        raise ValueError("truncation radius must be positive")
    g = np.asarray(g, float)
    n = float(np.linalg.norm(g))
    return g if n <= R else g * (R / n)


def tame_drift(b, h: float, alpha: float, mode: str = "global"):
    if not (h > 0 and alpha > 0):
        raise ValueError("h and alpha must be positive")
    b = np.asarray(b, float)
    c = h ** alpha
    if mode == "global":
        return b / (1.0 + c * float(np.linalg.norm(b)))
    if mode == "coordinatewise":
        return b / (1.0 + c * np.abs(b))
    raise ValueError(f"unknown taming mode {mode!r}")


@dataclass(frozen=True)
class LangevinConfig:
    step_size: float
    adjusted: bool = True
    drift: str = "identity"
    radius: float = 0.0
    alpha: float = 0.0
    tame_mode: str = "global"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step size must be positive")
        if self.drift not in DRIFTS:
            raise ValueError(f"drift must be one of {DRIFTS}")
        if self.drift == "truncate" and not self.radius > 0:
            raise ValueError("truncation needs radius > 0")
        if self.drift == "tame":
            if not self.alpha > 0:
                raise ValueError("taming needs alpha > 0")
            if self.tame_mode not in ("global", "coordinatewise"):
                raise ValueError("tame_mode must be global or coordinatewise")

    def modify(self, g):
        if self.drift == "truncate":
            return truncate_drift(g, self.radius)
        if self.drift == "tame":
            return tame_drift(g, self.step_size, self.alpha, self.tame_mode)
        return g


def proposal_mean(x, grad, cfg: LangevinConfig):
    return x + cfg.step_size * cfg.modify(grad)


def expected_jump(x, target, cfg: LangevinConfig):
    """Mean proposed displacement ``E[y] - x``."""
    return cfg.step_size * cfg.modify(target.gradient(x))


def _log_q(to, mean, h):
    d = to - mean
    return -float(d @ d) / (4.0 * h)


def langevin_step(state: ChainState, target, cfg: LangevinConfig, rng):
    x = state.position
    h = cfg.step_size
    g = state.ensure_gradient(target)
    mean_x = proposal_mean(x, g, cfg)
    y = mean_x + math.sqrt(2 * h) * rng.normal(x.size)
    lp_y = target.log_density(y) if target.domain.contains(y) else -math.inf
    if not cfg.adjusted:
        if not np.isfinite(lp_y):
            return state, False
        return ChainState(y, lp_y, None), True
    if not np.isfinite(lp_y):
        mh_accept(-math.inf, rng)
        return state, False
    g_y = np.asarray(target.gradient(y), float)
    log_ratio = lp_y - state.log_density + _log_q(x, proposal_mean(y, g_y, cfg), h) - _log_q(y, mean_x, h)
    if mh_accept(log_ratio, rng):
        return ChainState(y, lp_y, g_y), True
    return state, False


class LangevinKernel:
    def __init__(self, cfg: LangevinConfig):
        self.cfg = cfg

    def __call__(self, state, target, rng):
        return langevin_step(state, target, self.cfg, rng)

    def __repr__(self):
        return f"LangevinKernel({self.cfg})"


def mala(h: float) -> LangevinKernel:
    return LangevinKernel(LangevinConfig(h))


def ula(h: float) -> LangevinKernel:
    return LangevinKernel(LangevinConfig(h, adjusted=False))


def malta(h: float, R: float) -> LangevinKernel:
    return LangevinKernel(LangevinConfig(h, drift="truncate", radius=R))


def tamed_mala(h: float, alpha: float = 1.0, mode: str = "global", adjusted: bool = True) -> LangevinKernel:
    return LangevinKernel(LangevinConfig(h, adjusted=adjusted, drift="tame", alpha=alpha, tame_mode=mode))


@dataclass(frozen=True)
class BarkerConfig:
    scale: float
    mode: str = "coordinatewise"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("Barker scale must be positive")
        if self.mode not in ("coordinatewise", "full"):
            raise ValueError("mode must be coordinatewise or full")


def barker_propose(x, grad, cfg: BarkerConfig, rng):
    x = np.asarray(x, float)
    z = cfg.scale * rng.normal(x.size)
    if cfg.mode == "coordinatewise":
        flip = rng.uniform(x.size) >= expit(grad * z)
        z = np.where(flip, -z, z)
    elif rng.uniform() >= expit(float(grad @ z)):
        z = -z
    return x + z


def barker_mh_log_ratio(x, y, target, cfg: BarkerConfig, lp_x=None, g_x=None, lp_y=None, g_y=None) -> float:
    lp_x = target.log_density(x) if lp_x is None else lp_x
    lp_y = target.log_density(y) if lp_y is None else lp_y
    g_x = target.gradient(x) if g_x is None else g_x
    g_y = target.gradient(y) if g_y is None else g_y
    d = np.asarray(y, float) - np.asarray(x, float)
    if cfg.mode == "coordinatewise":
        corr = np.sum(log_sigmoid(-d * g_y) - log_sigmoid(d * g_x))
    else:
        corr = log_sigmoid(-float(d @ g_y)) - log_sigmoid(float(d @ g_x))
    return float(lp_y - lp_x + corr)


def barker_step(state: ChainState, target, cfg: BarkerConfig, rng):
    x = state.position
    g = state.ensure_gradient(target)
    y = barker_propose(x, g, cfg, rng)
    lp_y = target.log_density(y) if target.domain.contains(y) else -math.inf
    if not np.isfinite(lp_y):
        mh_accept(-math.inf, rng)
        return state, False
    g_y = np.asarray(target.gradient(y), float)
    log_ratio = barker_mh_log_ratio(x, y, target, cfg, state.log_density, g, lp_y, g_y)
    if mh_accept(log_ratio, rng):
        return ChainState(y, lp_y, g_y), True
    return state, False


class BarkerKernel:
    def __init__(self, cfg: BarkerConfig):
        self.cfg = cfg

    def __call__(self, state, target, rng):
        return barker_step(state, target, self.cfg, rng)

    def __repr__(self):
        return f"BarkerKernel({self.cfg})"


def barker(scale: float, mode: str = "coordinatewise") -> BarkerKernel:
    return BarkerKernel(BarkerConfig(scale, mode))

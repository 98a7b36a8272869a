"""Chain engine: random streams, chain state, MH accept step and chain drivers.

Stream derivation rule
----------------------
Stream ``(root_seed, stream_index)`` is the numpy ``PCG64`` generator seeded
with ``SeedSequence(root_seed, spawn_key=(stream_index,))``.  This is exactly
``SeedSequence(root_seed).spawn(n)[stream_index]``, so streams are reproducible
across platforms and statistically independent across indices.  Nested streams
(``RngStream.substream``) extend the spawn key.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional

import numpy as np


class InitializationError(ValueError):
    """Initial state is outside the target domain."""


class InvariantViolation(RuntimeError):
    """A kernel or simulator broke an internal invariant."""


class ReplicateError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"replicate {index} failed: {cause}")
        self.index = index
        self.cause = cause


class RngStream:
    """Reproducible random stream identified by ``(root_seed, stream_index)``."""

    def __init__(self, root_seed: int, stream_index: int = 0, _path: tuple = ()):
        if root_seed < 0 or stream_index < 0:
            raise ValueError("seeds and stream indices must be non-negative")
        self.root_seed = int(root_seed)
        self.stream_index = int(stream_index)
        self._key = (self.stream_index,) + tuple(_path)
        seq = np.random.SeedSequence(self.root_seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.root_seed, self.stream_index, self._key[1:] + (int(index),))

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def exponential(self, size=None):
        return self.generator.standard_exponential(size)

    def __repr__(self):
        return f"RngStream(root_seed={self.root_seed}, key={self._key})"


@dataclass
class ChainState:
    position: np.ndarray
    log_density: float
    gradient: Optional[np.ndarray] = None
    aux: Any = None  # kernel-specific carry-over (e.g. HMC velocity)

    @classmethod
    def at(cls, target, x, with_gradient: bool = True) -> "ChainState":
        x = np.asarray(x, dtype=float)
        lp = float(target.log_density(x))
        g = None
        if with_gradient and np.isfinite(lp):
            g = np.asarray(target.gradient(x), dtype=float)
        return cls(x, lp, g)

    def ensure_gradient(self, target) -> np.ndarray:
        if self.gradient is None:
            self.gradient = np.asarray(target.gradient(self.position), dtype=float)
        return self.gradient


class TraceRecord(NamedTuple):
    iteration: int
    position: np.ndarray
    accepted: bool
    log_density: float


@dataclass
class Trace:
    """Stored chain history.  With ``thin = k`` only every k-th state is kept,
    but acceptance counts cover every transition."""

    positions: np.ndarray
    accepted: np.ndarray
    log_density: np.ndarray
    iterations: np.ndarray
    target_id: str = ""
    sampler_id: str = ""
    root_seed: int = 0
    stream_index: int = 0
    n_iters: int = 0
    n_accepted: int = 0
    thin: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.iterations)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def records(self):
        for i in range(len(self)):
            yield TraceRecord(int(self.iterations[i]), self.positions[i],
                              bool(self.accepted[i]), float(self.log_density[i]))

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_iters if self.n_iters else 0.0

    def coordinate(self, i: int = 0) -> np.ndarray:
        return self.positions[:, i]


def mh_accept(log_ratio: float, rng: RngStream) -> bool:
    """Accept with probability ``min(1, exp(log_ratio))``; one uniform per call."""
    if math.isnan(log_ratio):
        raise InvariantViolation("NaN log acceptance ratio: proposal density bug upstream")
    u = rng.uniform()
    if u == 0.0:
        return log_ratio > -math.inf
    return math.log(u) < log_ratio


Kernel = Callable[[ChainState, Any, RngStream], "tuple[ChainState, bool]"]


def identity_kernel(state, target, rng):
    return state, False


def _resolve_x0(x0, rng):
    if callable(x0):
        x0 = x0(rng)
    return np.atleast_1d(np.asarray(x0, dtype=float)).copy()


def run_chain(kernel: Kernel, target, x0, n_iters: int, rng: RngStream, thin: int = 1,
              target_id: str = "", sampler_id: str = "") -> Trace:
    """Run ``n_iters`` kernel applications from ``x0`` and return the trace.

    ``x0`` may be a callable taking the stream and returning the start point.
    """
    if n_iters < 0:
        raise ValueError("n_iters must be >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    x = _resolve_x0(x0, rng)
    if x.shape != (target.dim,):
        raise InitializationError(f"x0 has shape {x.shape}, target dimension is {target.dim}")
    if not target.domain.contains(x) or not np.isfinite(target.log_density(x)):
        raise InitializationError(f"x0 = {x} is outside the domain of {target.name}")
    state = ChainState.at(target, x)

    n_store = n_iters // thin + 1
    pos = np.empty((n_store, target.dim))
    acc = np.zeros(n_store, dtype=bool)
    lps = np.empty(n_store)
    its = np.empty(n_store, dtype=np.int64)
    pos[0], lps[0], its[0] = state.position, state.log_density, 0
    n_acc = 0
    slot = 1
    for it in range(1, n_iters + 1):
        state, accepted = kernel(state, target, rng)
        if not np.isfinite(state.log_density):
            raise InvariantViolation(
                f"{sampler_id or 'kernel'} returned a state outside the domain at iteration {it}")
        n_acc += bool(accepted)
        if it % thin == 0:
            pos[slot], acc[slot], lps[slot], its[slot] = state.position, accepted, state.log_density, it
            slot += 1
    return Trace(pos, acc, lps, its, target_id or getattr(target, "name", ""), sampler_id,
                 rng.root_seed, rng.stream_index, n_iters, n_acc, thin)


@dataclass
class ChainSpec:
    """Everything needed to run one replicate given a stream."""

    target: Any
    kernel: Kernel
    x0: Any
    n_iters: int
    root_seed: int = 0
    thin: int = 1
    target_id: str = ""
    sampler_id: str = ""


def run_replicates(spec, n_replicates: int, workers: int = 1, runner=None) -> list:
    """Run replicate ``k`` on stream ``(spec.root_seed, k)``.

    ``runner(spec, rng)`` overrides the default single-chain driver (used for
    PDMP and fused kernels).  Output order and content do not depend on
    ``workers``.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    if runner is None:
        def runner(s, rng):
            return run_chain(s.kernel, s.target, s.x0, s.n_iters, rng, s.thin, s.target_id, s.sampler_id)

    def one(k):
        try:
            return runner(spec, RngStream(spec.root_seed, k))
        except Exception as exc:
            raise ReplicateError(k, exc) from exc

    if workers <= 1:
        return [one(k) for k in range(n_replicates)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_replicates)))

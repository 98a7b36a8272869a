"""Invertible space transformations, pushforward targets and stereographic
sampling on the sphere."""
from __future__ import annotations

import math

import numpy as np

from .core import ChainState, mh_accept
from .targets import Domain, Target, finite_difference_gradient


class DiffeoTransform:
    """Bijection of R^d with log-Jacobian terms.

    Subclasses provide ``forward``, ``inverse``, ``log_det_forward`` and
    ``pullback_gradient(y, g)`` which returns ``J_inv(y)^T g`` plus the
    gradient of ``log_det_inverse`` at ``y``.
    """

    name = "transform"

    def forward(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def log_det_forward(self, x) -> float:
        raise NotImplementedError

    def log_det_inverse(self, y) -> float:
        return -self.log_det_forward(self.inverse(y))

    def pullback_gradient(self, y, g):
        # slow finite-difference fallback
        y = np.asarray(y, float)
        eps = 1e-6
        J = np.column_stack([(self.inverse(y + eps * e) - self.inverse(y - eps * e)) / (2 * eps)
                             for e in np.eye(y.size)])
        return J.T @ g + finite_difference_gradient(self.log_det_inverse, y, 1e-6)


class IdentityTransform(DiffeoTransform):
    name = "identity"

    def forward(self, x):
        return np.array(x, float)

    def inverse(self, y):
        return np.array(y, float)

    def log_det_forward(self, x):
        return 0.0

    def log_det_inverse(self, y):
        return 0.0

    def pullback_gradient(self, y, g):
        return np.asarray(g, float)


class SignLogTransform(DiffeoTransform):
    """Coordinatewise f(x) = sign(x) log(1 + |x|)."""

    name = "signlog"

    def forward(self, x):
        x = np.asarray(x, float)
        return np.sign(x) * np.log1p(np.abs(x))

    def inverse(self, y):
        y = np.asarray(y, float)
        return np.sign(y) * np.expm1(np.abs(y))

    def log_det_forward(self, x):
        return -float(np.sum(np.log1p(np.abs(x))))

    def log_det_inverse(self, y):
        return float(np.sum(np.abs(y)))

    def pullback_gradient(self, y, g):
        y = np.asarray(y, float)
        return np.asarray(g, float) * np.exp(np.abs(y)) + np.sign(y)


def signlog_transform() -> SignLogTransform:
    return SignLogTransform()


class RadialProfile:
    """Scalar profile h with h(0) = 0 and h' > 0.  ``inverse`` and ``d2h`` are
    optional; the inverse falls back to bisection plus Newton."""

    def __init__(self, h, dh, d2h=None, inverse=None, name="profile"):
        self.h, self.dh, self.d2h, self._inv, self.name = h, dh, d2h, inverse, name

    def inverse(self, rho: float) -> float:
        if self._inv is not None:
            return self._inv(rho)
        lo, hi = 0.0, 1.0
        while self.h(hi) < rho:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.h(mid) < rho:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        r = 0.5 * (lo + hi)
        for _ in range(3):
            r -= (self.h(r) - rho) / self.dh(r)
        return r


LOG_PROFILE = RadialProfile(math.log1p, lambda r: 1.0 / (1.0 + r), lambda r: -1.0 / (1.0 + r) ** 2,
                            math.expm1, "log1p")


class IsotropicTransform(DiffeoTransform):
    """f(x) = h(|x|) x / |x|."""

    name = "isotropic"
    _small = 1e-8

    def __init__(self, dim: int, profile: RadialProfile = LOG_PROFILE):
        self.dim = int(dim)
        self.profile = profile
        grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 400)])
        vals = np.array([profile.h(r) for r in grid])
        slopes = np.array([profile.dh(r) for r in grid])
        if abs(vals[0]) > 1e-14 or np.any(np.diff(vals) <= 0) or np.any(slopes <= 0):
            raise ValueError("radial profile must satisfy h(0) = 0 and be strictly increasing")

    def forward(self, x):
        x = np.asarray(x, float)
        r = float(np.linalg.norm(x))
        if r < self._small:
            return self.profile.dh(0.0) * x
        return self.profile.h(r) / r * x

    def inverse(self, y):
        y = np.asarray(y, float)
        rho = float(np.linalg.norm(y))
        if rho < self._small:
            return y / self.profile.dh(0.0)
        return self.profile.inverse(rho) / rho * y

    def log_det_forward(self, x):
        d = np.asarray(x).size
        r = float(np.linalg.norm(x))
        if r < self._small:
            return d * math.log(self.profile.dh(0.0))
        return math.log(self.profile.dh(r)) + (d - 1) * math.log(self.profile.h(r) / r)

    def pullback_gradient(self, y, g):
        y = np.asarray(y, float)
        g = np.asarray(g, float)
        d = y.size
        rho = float(np.linalg.norm(y))
        pr = self.profile
        if rho < self._small or pr.d2h is None:
            if rho < self._small:
                return g / pr.dh(0.0)
            return super().pullback_gradient(y, g)
        R = pr.inverse(rho)
        phi_rho = R / rho            # phi(rho)/rho
        dphi = 1.0 / pr.dh(R)        # phi'(rho)
        u = y / rho
        Jg = phi_rho * g + (dphi - phi_rho) * u * float(u @ g)
        # d/drho of -log h'(phi(rho)) - (d-1) log(rho/phi(rho))
        dL = -pr.d2h(R) / pr.dh(R) * dphi - (d - 1) * (1.0 / rho - dphi / R)
        return Jg + dL * u


def isotropic_transform(dim: int, profile: RadialProfile = LOG_PROFILE) -> IsotropicTransform:
    return IsotropicTransform(dim, profile)


class PushforwardTarget(Target):
    """Law of f(X) for X ~ base: log density log pi(f^-1 y) + log|det Df^-1(y)|."""

    def __init__(self, base, transform: DiffeoTransform):
        super().__init__(base.dim, Domain())
        self.base = base
        self.transform = transform
        self.name = f"{base.name}_{transform.name}"

    def log_density(self, y):
        x = self.transform.inverse(y)
        if not self.base.domain.contains(x):
            return -math.inf
        return self.base.log_density(x) + self.transform.log_det_inverse(y)

    def gradient(self, y):
        x = self.transform.inverse(y)
        return self.transform.pullback_gradient(y, np.asarray(self.base.gradient(x), float))


def pushforward_target(target, transform: DiffeoTransform) -> PushforwardTarget:
    return PushforwardTarget(target, transform)


class TransformedKernel:
    """Runs ``inner`` on the pushforward target and reports states in the
    original space."""

    def __init__(self, inner, transform: DiffeoTransform):
        self.inner = inner
        self.transform = transform
        self._pushed = {}

    def _target(self, target):
        key = id(target)
        if key not in self._pushed:
            self._pushed[key] = (target, pushforward_target(target, self.transform))
        return self._pushed[key][1]

    def __call__(self, state, target, rng):
        pushed = self._target(target)
        y = self.transform.forward(state.position)
        inner_state = ChainState.at(pushed, y, with_gradient=False)
        new, accepted = self.inner(inner_state, pushed, rng)
        if not accepted:
            return state, False
        x = self.transform.inverse(new.position)
        return ChainState(x, float(target.log_density(x))), True


def transformed_kernel(kernel, transform: DiffeoTransform) -> TransformedKernel:
    return TransformedKernel(kernel, transform)


# ------------------------------------------------------------- stereographic

def stereographic_forward(x, scale: float = 1.0):
    """R^d -> unit sphere in R^{d+1}; x = 0 maps to (0, ..., 0, -1)."""
    x = np.asarray(x, float)
    n2 = float(x @ x)
    den = n2 + scale * scale
    return np.append(2 * scale * x / den, (n2 - scale * scale) / den)


def stereographic_inverse(z, scale: float = 1.0):
    z = np.asarray(z, float)
    gap = 1.0 - z[-1]
    if gap <= 0:
        raise ValueError("the pole has no preimage")
    return scale * z[:-1] / gap


def stereographic_log_jacobian(x, scale: float = 1.0) -> float:
    """log density correction (up to a constant) from R^d to the sphere."""
    x = np.asarray(x, float)
    return x.size * math.log(scale * scale + float(x @ x))


def sphere_log_density(target, scale: float = 1.0):
    def log_density(z):
        if z[-1] >= 1.0:
            return -math.inf
        x = stereographic_inverse(z, scale)
        if not np.all(np.isfinite(x)) or not target.domain.contains(x):
            return -math.inf
        return target.log_density(x) + stereographic_log_jacobian(x, scale)
    return log_density


def sphere_rwm_step(point, log_density, tangent_scale: float, rng, current_log_density=None):
    """Random-walk Metropolis on the sphere: Gaussian tangent step, renormalized.
    The proposal density depends only on the angle between points, so it is
    symmetric and the MH ratio is the density ratio."""
    z = np.asarray(point, float)
    lp = log_density(z) if current_log_density is None else current_log_density
    xi = tangent_scale * rng.normal(z.size)
    xi -= (xi @ z) * z
    w = z + xi
    w /= np.linalg.norm(w)
    lp_w = log_density(w) if w[-1] < 1.0 else -math.inf
    if mh_accept(lp_w - lp if np.isfinite(lp_w) else -math.inf, rng):
        return w, lp_w, True
    return z, lp, False


class StereographicRWM:
    """Kernel on R^d that moves by sphere RWM in stereographic coordinates."""

    def __init__(self, tangent_scale: float, scale: float = 1.0):
        if not (tangent_scale > 0 and scale > 0):
            raise ValueError("scales must be positive")
        self.tangent_scale = float(tangent_scale)
        self.scale = float(scale)

    def __call__(self, state, target, rng):
        logd = sphere_log_density(target, self.scale)
        z = stereographic_forward(state.position, self.scale)
        z1, _, accepted = sphere_rwm_step(z, logd, self.tangent_scale, rng)
        if not accepted:
            return state, False
        x = stereographic_inverse(z1, self.scale)
        return ChainState(x, float(target.log_density(x))), True

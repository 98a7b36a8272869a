"""Target distributions.

Every target exposes ``log_density``, ``gradient`` (of the log-density),
``partial`` and a ``domain``.  Optional analytic extras are plain methods that
raise :class:`MissingExtra` unless overridden; ``target.has(name)`` tells which
ones are available.

PDMP hooks (all optional):

``zz_rate_profile(x, v, i)`` / ``bps_rate_profile(x, v)``
    exact event-rate description along the ray ``x + t v``;
``grad_bound(x, v, horizon)``
    per-coordinate upper bounds on ``|d_i U(x + t v)|`` for ``t`` in
    ``[0, horizon]``, used for thinning.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special


class MissingExtra(NotImplementedError):
    pass


@dataclass(frozen=True)
class Domain:
    kind: str = "all"  # "all" | "box" | "ball"
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    radius: float = math.inf

    @classmethod
    def box(cls, lower, upper):
        return cls("box", np.asarray(lower, float), np.asarray(upper, float))

    @classmethod
    def ball(cls, radius):
        return cls("ball", radius=float(radius))

    def contains(self, x) -> bool:
        if self.kind == "all":
            return bool(np.all(np.isfinite(x)))
        if self.kind == "box":
            return bool(np.all(x >= self.lower) and np.all(x <= self.upper))
        return bool(np.dot(x, x) < self.radius ** 2)

    def boundary_hit(self, x, v):
        """First time ``t > 0`` at which ``x + t v`` reaches the boundary, and
        the coordinate that hits it (box only; -1 otherwise)."""
        if self.kind == "all":
            return math.inf, -1
        if self.kind == "box":
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(v > 0, (self.upper - x) / v, np.where(v < 0, (self.lower - x) / v, np.inf))
            i = int(np.argmin(t))
            return max(float(t[i]), 0.0), i
        a, b, c = np.dot(v, v), 2 * np.dot(x, v), np.dot(x, x) - self.radius ** 2
        if a == 0:
            return math.inf, -1
        return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a), -1


class Target:
    name = "target"
    convex = False
    separable = False
    extras: frozenset = frozenset()

    def __init__(self, dim: int, domain: Domain = Domain()):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self.domain = domain

    # core interface
    def log_density(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def partial(self, i: int, x) -> float:
        return float(self.gradient(x)[i])

    def potential(self, x) -> float:
        return -self.log_density(x)

    def has(self, extra: str) -> bool:
        return extra in self.extras

    # optional extras
    def prox(self, lam: float, x) -> np.ndarray:
        raise MissingExtra(f"{self.name} has no analytic prox")

    def exact_sample(self, rng, n: int) -> np.ndarray:
        raise MissingExtra(f"{self.name} has no exact sampler")

    def true_moments(self):
        raise MissingExtra(f"{self.name} has no closed-form moments")

    def tail_prob(self, threshold: float) -> float:
        raise MissingExtra(f"{self.name} has no closed-form tail probability")

    def grad_bound(self, x, v, horizon: float) -> np.ndarray:
        raise MissingExtra(f"{self.name} has no gradient bound")

    def zz_rate_bound(self, x, v, horizon: float) -> np.ndarray:
        return self.grad_bound(x, v, horizon) * np.abs(v)

    def zz_rate_profile(self, x, v, i: int):
        return None

    def bps_rate_profile(self, x, v):
        return None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


def finite_difference_gradient(f, x, step: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def _poly_profile(coeffs):
    from .pdmp import PolynomialRate
    return PolynomialRate(np.trim_zeros(np.asarray(coeffs, float), "b") if np.any(coeffs) else np.zeros(1))


class Gaussian(Target):
    name = "gaussian"
    convex = True
    extras = frozenset({"prox", "exact_sample", "true_moments", "zz_rate_profile", "bps_rate_profile"})

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        try:
            self._chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        super().__init__(cov.shape[0])
        self.cov = cov
        self.precision = np.linalg.inv(cov)

    def log_density(self, x):
        x = np.asarray(x, float)
        return -0.5 * float(x @ self.precision @ x)

    def gradient(self, x):
        return -self.precision @ np.asarray(x, float)

    def prox(self, lam, x):
        return np.linalg.solve(np.eye(self.dim) + lam * self.precision, x)

    def exact_sample(self, rng, n):
        return rng.normal((n, self.dim)) @ self._chol.T

    def true_moments(self):
        return np.zeros(self.dim), self.cov.copy()

    def zz_rate_profile(self, x, v, i):
        p = self.precision[i]
        return _poly_profile([v[i] * (p @ x), v[i] * (p @ v)])

    def bps_rate_profile(self, x, v):
        pv = self.precision @ v
        return _poly_profile([x @ pv, v @ pv])


def gaussian_2d(C=((1.0, 0.8), (0.8, 1.0))) -> Gaussian:
    C = np.asarray(C, float)
    if C.shape != (2, 2):
        raise ValueError("gaussian_2d needs a 2x2 covariance")
    t = Gaussian(C)
    t.name = "gaussian_2d"
    return t


class Quartic(Target):
    """U(x) = ||x||^4."""

    name = "quartic"
    convex = True
    extras = frozenset({"prox", "zz_rate_profile", "bps_rate_profile"})

    def log_density(self, x):
        r2 = float(np.dot(x, x))
        return -r2 * r2

    def gradient(self, x):
        x = np.asarray(x, float)
        return -4.0 * np.dot(x, x) * x

    def prox(self, lam, x):
        # radial: minimizer is t x/|x| with t + 4 lam t^3 = |x|
        x = np.asarray(x, float)
        r = np.linalg.norm(x)
        if r == 0:
            return np.zeros_like(x)
        roots = np.roots([4 * lam, 0.0, 1.0, -r])
        t = float(np.real(roots[np.argmin(np.abs(roots.imag))]))
        return t * x / r

    def _norm2_poly(self, x, v):
        return np.array([x @ x, 2 * (x @ v), v @ v])

    def zz_rate_profile(self, x, v, i):
        return _poly_profile(4 * v[i] * P.polymul(self._norm2_poly(x, v), [x[i], v[i]]))

    def bps_rate_profile(self, x, v):
        return _poly_profile(4 * P.polymul(self._norm2_poly(x, v), [x @ v, v @ v]))


def quartic(dim: int = 1) -> Quartic:
    return Quartic(dim)


class LaplaceProduct(Target):
    """U(x) = ||x||_1, with gradient 0 taken at exact kinks."""

    name = "laplace"
    convex = True
    separable = True
    extras = frozenset({"prox", "exact_sample", "true_moments", "zz_rate_profile", "bps_rate_profile", "grad_bound"})

    def log_density(self, x):
        return -float(np.sum(np.abs(x)))

    def gradient(self, x):
        return -np.sign(np.asarray(x, float))

    def prox(self, lam, x):
        x = np.asarray(x, float)
        return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)

    def exact_sample(self, rng, n):
        return rng.generator.laplace(size=(n, self.dim))

    def true_moments(self):
        return np.zeros(self.dim), 2.0 * np.eye(self.dim)

    def grad_bound(self, x, v, horizon):
        return np.ones(self.dim)

    def zz_rate_profile(self, x, v, i):
        from .pdmp import PiecewiseConstantRate
        if v[i] == 0:
            return PiecewiseConstantRate([0.0], [0.0])
        if x[i] * v[i] >= 0:
            return PiecewiseConstantRate([0.0], [abs(v[i])])
        return PiecewiseConstantRate([0.0, -x[i] / v[i]], [0.0, abs(v[i])])

    def bps_rate_profile(self, x, v):
        from .pdmp import PiecewiseConstantRate
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(x * v < 0, -x / v, np.inf)
        order = np.argsort(cross)
        s = np.where(x != 0, np.sign(x), np.sign(v))
        breaks, values = [0.0], [max(0.0, float(v @ s))]
        for j in order:
            if not np.isfinite(cross[j]):
                break
            s[j] = np.sign(v[j])
            breaks.append(float(cross[j]))
            values.append(max(0.0, float(v @ s)))
        return PiecewiseConstantRate(breaks, values)


def laplace_product(dim: int = 1) -> LaplaceProduct:
    return LaplaceProduct(dim)


class ArcsineBoundary(Target):
    """pi(x) ~ (1 - x^2)^(-1/2) on (-1, 1); density explodes at the boundary."""

    name = "arcsine"
    extras = frozenset({"exact_sample", "true_moments", "tail_prob"})

    def __init__(self):
        super().__init__(1, Domain.ball(1.0))

    def log_density(self, x):
        x0 = float(np.asarray(x).reshape(-1)[0])
        if not -1.0 < x0 < 1.0:
            return -math.inf
        return -0.5 * math.log1p(-x0 * x0)

    def gradient(self, x):
        x = np.asarray(x, float)
        return x / (1.0 - x * x)

    def exact_sample(self, rng, n):
        return np.cos(math.pi * rng.uniform((n, 1)))

    def true_moments(self):
        return np.zeros(1), np.array([[0.5]])

    def tail_prob(self, threshold):
        """P(|X| > threshold)."""
        return 1.0 - 2.0 / math.pi * math.asin(threshold)


def arcsine_boundary() -> ArcsineBoundary:
    return ArcsineBoundary()


class BoxGaussian(Target):
    """N(0, sigma2 I) restricted to [-1, 1]^d.  ``sigma2 = inf`` gives the
    uniform law on the box (U is then the box indicator)."""

    name = "box_gaussian"
    convex = True
    separable = True
    extras = frozenset({"prox", "exact_sample", "true_moments", "zz_rate_profile", "bps_rate_profile"})

    def __init__(self, dim, sigma2=1.0):
        if not sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        super().__init__(dim, Domain.box(-np.ones(dim), np.ones(dim)))
        self.sigma2 = float(sigma2)
        self._prec = 0.0 if math.isinf(sigma2) else 1.0 / sigma2

    def log_density(self, x):
        x = np.asarray(x, float)
        if np.any(np.abs(x) > 1.0):
            return -math.inf
        return -0.5 * self._prec * float(x @ x)

    def gradient(self, x):
        return -self._prec * np.asarray(x, float)

    def prox(self, lam, x):
        return np.clip(np.asarray(x, float) / (1.0 + lam * self._prec), -1.0, 1.0)

    def coordinate_variance(self) -> float:
        if self._prec == 0.0:
            return 1.0 / 3.0
        s = math.sqrt(self.sigma2)
        a = 1.0 / s
        phi = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
        return self.sigma2 * (1.0 - 2 * a * phi / (2 * special.ndtr(a) - 1))

    def exact_sample(self, rng, n):
        u = rng.uniform((n, self.dim))
        if self._prec == 0.0:
            return 2 * u - 1
        s = math.sqrt(self.sigma2)
        lo = special.ndtr(-1.0 / s)
        return s * special.ndtri(lo + u * (1 - 2 * lo))

    def true_moments(self):
        return np.zeros(self.dim), self.coordinate_variance() * np.eye(self.dim)

    def zz_rate_profile(self, x, v, i):
        return _poly_profile([self._prec * v[i] * x[i], self._prec * v[i] * v[i]])

    def bps_rate_profile(self, x, v):
        return _poly_profile([self._prec * (x @ v), self._prec * (v @ v)])


def box_gaussian(dim: int = 1, sigma2: float = 1.0) -> BoxGaussian:
    return BoxGaussian(dim, sigma2)


class CoupledQuartic2D(Target):
    """pi(x) ~ exp(-x1^4 - x2^4 - 5 x1 x2)."""

    name = "coupled_quartic_2d"
    extras = frozenset({"zz_rate_profile", "bps_rate_profile"})

    def __init__(self):
        super().__init__(2)

    def log_density(self, x):
        x1, x2 = x
        return -(x1 ** 4 + x2 ** 4 + 5 * x1 * x2)

    def gradient(self, x):
        x1, x2 = x
        return -np.array([4 * x1 ** 3 + 5 * x2, 4 * x2 ** 3 + 5 * x1])

    def _dU_polys(self, x, v):
        c1 = P.polypow([x[0], v[0]], 3)
        c2 = P.polypow([x[1], v[1]], 3)
        d1 = P.polyadd(4 * c1, [5 * x[1], 5 * v[1]])
        d2 = P.polyadd(4 * c2, [5 * x[0], 5 * v[0]])
        return d1, d2

    def zz_rate_profile(self, x, v, i):
        return _poly_profile(v[i] * self._dU_polys(x, v)[i])

    def bps_rate_profile(self, x, v):
        d1, d2 = self._dU_polys(x, v)
        return _poly_profile(P.polyadd(v[0] * d1, v[1] * d2))


def coupled_quartic_2d() -> CoupledQuartic2D:
    return CoupledQuartic2D()


class PowerRadial(Target):
    """pi(x) ~ (1 + ||x||^2)^(-gamma).  ``gamma = (d+1)/2`` is the isotropic
    Cauchy law; smaller exponents arise as speed-tilted versions of it."""

    name = "power_radial"
    extras = frozenset({"grad_bound", "zz_rate_profile"})

    def __init__(self, dim, gamma):
        super().__init__(dim)
        self.gamma = float(gamma)

    @property
    def normalizable(self) -> bool:
        return 2 * self.gamma > self.dim

    def has(self, extra):
        # closed-form event times only in one dimension
        if extra == "zz_rate_profile" and self.dim != 1:
            return False
        return super().has(extra)

    def log_density(self, x):
        return -self.gamma * math.log1p(float(np.dot(x, x)))

    def gradient(self, x):
        x = np.asarray(x, float)
        return -2 * self.gamma * x / (1.0 + np.dot(x, x))

    def grad_bound(self, x, v, horizon):
        # 2 g |y_i| / (1 + |y|^2) <= g
        return np.full(self.dim, self.gamma)

    def zz_rate_profile(self, x, v, i):
        if self.dim != 1 or abs(v[0]) != 1.0:
            return None
        from .pdmp import LogQuadraticRate
        return LogQuadraticRate(self.gamma, float(v[0] * x[0]))


class Cauchy(PowerRadial):
    name = "cauchy"
    extras = PowerRadial.extras | {"exact_sample", "tail_prob"}

    def __init__(self, dim=1):
        super().__init__(dim, 0.5 * (dim + 1))

    def exact_sample(self, rng, n):
        z = rng.normal((n, self.dim))
        g = rng.normal((n, 1))
        return z / np.abs(g)

    def tail_prob(self, threshold):
        """P(X_1 >= threshold)."""
        return 0.5 - math.atan(threshold) / math.pi


def cauchy_1d() -> Cauchy:
    return Cauchy(1)


def isotropic_cauchy(dim: int = 2) -> Cauchy:
    return Cauchy(dim)


@dataclass
class RegressionData:
    X: np.ndarray
    Y: np.ndarray
    beta_true: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, float))
        self.Y = np.asarray(self.Y, float).reshape(-1)
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y disagree on the number of observations")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise ValueError("regression data must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "X": self.X.reshape(-1).tolist(), "Y": self.Y.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionData":
        X = np.asarray(d["X"], float)
        if X.size != d["n"] * d["p"]:
            raise ValueError("X has the wrong number of entries")
        return cls(X.reshape(d["n"], d["p"]), d["Y"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "RegressionData":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def synthesize_regression(p: int, n: int, rng) -> RegressionData:
    """Horseshoe-drawn coefficients, covariates uniform on {0,1,2,3}, Cauchy noise."""
    g = rng.generator
    lam = np.abs(g.standard_cauchy(p))
    beta = np.sqrt(lam) * g.standard_normal(p)
    X = g.integers(0, 4, size=(n, p)).astype(float)
    Y = X @ beta + g.standard_cauchy(n)
    return RegressionData(X, Y, beta)


class HorseshoeRegression(Target):
    """Posterior of Cauchy-noise regression with a horseshoe prior, on the
    unconstrained state ``(beta, l)`` with ``l_j = log(lambda_j)`` and
    ``lambda_j`` the prior variance of ``beta_j``."""

    name = "horseshoe_regression"
    extras = frozenset({"grad_bound"})

    def __init__(self, data: RegressionData):
        super().__init__(2 * data.p)
        self.data = data
        self.p = data.p
        self._colsum = np.abs(data.X).sum(axis=0)

    def split(self, x):
        x = np.asarray(x, float)
        return x[: self.p], x[self.p:]

    def log_density(self, x):
        beta, ell = self.split(x)
        r = self.data.Y - self.data.X @ beta
        prior = -np.logaddexp(0.0, 2 * ell) - 0.5 * math.log(2.0) + 0.5 * ell - 0.5 * beta ** 2 * np.exp(-ell)
        return float(prior.sum() - np.log1p(r * r).sum())

    def gradient(self, x):
        beta, ell = self.split(x)
        r = self.data.Y - self.data.X @ beta
        w = np.exp(-ell)
        gb = -beta * w + self.data.X.T @ (2 * r / (1 + r * r))
        gl = -2 * special.expit(2 * ell) + 0.5 + 0.5 * beta ** 2 * w
        return np.concatenate([gb, gl])

    def grad_bound(self, x, v, horizon):
        beta, ell = self.split(x)
        vb, vl = self.split(np.abs(v))
        bmax = np.abs(beta) + horizon * vb
        emax = np.exp(-ell + horizon * vl)
        # residuals move linearly over the window; 2|r|/(1+r^2) peaks at |r| = 1
        r0 = self.data.Y - self.data.X @ beta
        r1 = r0 - horizon * (self.data.X @ self.split(v)[0])
        lo, hi = np.minimum(r0, r1), np.maximum(r0, r1)
        peak = ((lo <= 1) & (hi >= 1)) | ((lo <= -1) & (hi >= -1))
        g = np.where(peak, 1.0, np.maximum(2 * np.abs(r0) / (1 + r0 ** 2), 2 * np.abs(r1) / (1 + r1 ** 2)))
        return np.concatenate([bmax * emax + np.abs(self.data.X).T @ g, 1.5 + 0.5 * bmax ** 2 * emax])


def cauchy_regression_horseshoe(data: RegressionData) -> HorseshoeRegression:
    return HorseshoeRegression(data)

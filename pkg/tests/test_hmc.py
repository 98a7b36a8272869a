import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import gamma as gamma_fn

from robustmc.core import ChainState, InvariantViolation, RngStream, run_chain
from robustmc.hmc import (GaussianFlow, GaussianKE, HmcConfig, HmcKernel, LaplaceKE, PowerKE, RelativisticKE,
                          hamiltonian, kinetic_energy, leapfrog, rhmc_exact_gaussian)
from robustmc.targets import Gaussian, Target, gaussian_2d, quartic


def test_leapfrog_single_step():
    x, v = leapfrog([1.0], [0.0], 0.1, 1, Gaussian(np.eye(1)), GaussianKE())
    assert abs(x[0] - 0.995) < 1e-15 and abs(v[0] + 0.09975) < 1e-15


class Flat(Target):
    name = "flat"

    def __init__(self, d):
        super().__init__(d)

    def log_density(self, x):
        return 0.0

    def gradient(self, x):
        return np.zeros(self.dim)


@pytest.mark.parametrize("K", [GaussianKE(), PowerKE(1.5), LaplaceKE(), RelativisticKE(1.0)])
def test_zero_gradient_is_pure_translation(K):
    v = np.array([0.7, -1.2])
    x, v1 = leapfrog([0.0, 0.0], v, 0.05, 20, Flat(2), K)
    assert np.allclose(v1, v) and np.allclose(x, 20 * 0.05 * K.grad(v))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from(["gaussian", "power", "relativistic"]))
def test_leapfrog_is_reversible(x0, v0, name):
    K = kinetic_energy(name)
    t = quartic(1)
    x, v = leapfrog([x0], [v0], 0.01, 15, t, K)
    xb, vb = leapfrog(x, -v, 0.01, 15, t, K)
    assert abs(xb[0] - x0) < 1e-9 and abs(vb[0] + v0) < 1e-9


def test_tiny_step_accepts_almost_always():
    tr = run_chain(HmcKernel(HmcConfig(1e-4, 10)), gaussian_2d(), [1.0, 0.5], 2000, RngStream(0))
    assert tr.acceptance_rate > 0.999


def test_power_kinetic_escapes_quartic_tail():
    kern = HmcKernel(HmcConfig(0.05, 20), PowerKE(4 / 3))
    tr = run_chain(kern, quartic(1), [5.0], 200, RngStream(1))
    assert np.any(np.abs(tr.positions[:, 0]) < 1)


def test_kinetic_samplers_moments():
    rng = RngStream(2)
    g = np.array([GaussianKE().sample(rng, 1)[0] for _ in range(40_000)])
    assert abs(g.var() - 1) < 0.03
    lap = LaplaceKE().sample(rng, 100_000)
    assert abs(lap.var() - 2) < 0.05
    p = 4 / 3
    pw = PowerKE(p).sample(rng, 100_000)
    # density proportional to exp(-|v|^p): E|v|^p = 1/p
    norm = integrate.quad(lambda u: math.exp(-u ** p), 0, np.inf)[0]
    moment = integrate.quad(lambda u: u ** p * math.exp(-u ** p), 0, np.inf)[0] / norm
    assert abs(moment - 1 / p) < 1e-8
    assert abs(np.mean(np.abs(pw) ** p) - moment) < 0.02
    assert abs(norm - gamma_fn(1 + 1 / p)) < 1e-10


def test_relativistic_sampler_radial_law():
    K = RelativisticKE(1.0)
    rng = RngStream(3)
    r = np.array([abs(K.sample(rng, 1)[0]) for _ in range(20_000)])
    dens = lambda u: math.exp(-(math.sqrt(1 + u * u) - 1))
    z = integrate.quad(dens, 0, np.inf)[0]
    p2 = integrate.quad(dens, 0, 2)[0] / z
    assert abs(np.mean(r < 2) - p2) < 0.015


def test_partial_refresh_needs_gaussian_kinetic():
    with pytest.raises(ValueError):
        HmcKernel(HmcConfig(0.1, 5, refresh_corr=0.5), PowerKE())
    with pytest.raises(ValueError):
        kinetic_energy("bogus")
    with pytest.raises(ValueError):
        HmcConfig(0.1, None)


def test_hamiltonian_conserved_for_small_steps():
    t = gaussian_2d()
    x, v = np.array([1.0, -0.5]), np.array([0.3, 0.8])
    x1, v1 = leapfrog(x, v, 1e-3, 1000, t, GaussianKE())
    assert abs(hamiltonian(t, GaussianKE(), x1, v1) - hamiltonian(t, GaussianKE(), x, v)) < 1e-5


def test_exact_gaussian_flow_on_eigenline():
    C = np.diag([1.0, 4.0])
    f = GaussianFlow(C)
    x, v = f.advance(np.array([1.0, 0.0]), np.zeros(2), math.pi / 2)
    assert np.allclose(x, [0.0, 0.0], atol=1e-15) and np.allclose(v, [-1.0, 0.0])
    x, v = f.advance(np.array([0.0, 2.0]), np.zeros(2), math.pi)
    assert np.allclose(x, [0.0, 0.0], atol=1e-15)


def test_rhmc_exact_moments():
    C = np.array([[1.0, 0.5], [0.5, 2.0]])
    tr = rhmc_exact_gaussian(C, 0.0, 1.0, 40_000, np.zeros(2), RngStream(4))
    assert np.allclose(np.cov(tr.positions.T), C, atol=0.08)
    assert tr.meta["max_relative_energy_drift"] < 1e-8
    with pytest.raises(ValueError):
        rhmc_exact_gaussian(C, 2.0, 1.0, 5, np.zeros(2), RngStream(4))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from droplet_channel.cloud import (
    buoyant_mass,
    cloud_density,
    drag_coefficient,
    flow_regime,
    lambda_step,
    reynolds,
    sample_count,
    settling_velocity,
)
from droplet_channel.errors import OutOfRegimeError, SingularGeometryError
from droplet_channel.params import DropletClass, Environment, ScenarioConfig

ENV = Environment()


def test_reynolds():
    assert reynolds(2e-6, 0.0, ENV) == 0.0
    assert reynolds(2e-6, 11.2, ENV) == pytest.approx(1.3817263157894735, rel=1e-12)
    assert reynolds(1e-3, 11.2, ENV) == pytest.approx(690.8631578947367, rel=1e-12)


@pytest.mark.parametrize("Re,expected", [
    (1.0, 24.0),
    (2.0, 12.205448174649273),
    (500.0, 18.5 / 500**0.6),
    (1000.0, 0.44),
    (2e5, 0.44),
])
def test_drag_coefficient(Re, expected):
    assert drag_coefficient(Re) == pytest.approx(expected, rel=1e-12)


def test_drag_out_of_range():
    with pytest.raises(OutOfRegimeError):
        drag_coefficient(2.0001e5)
    with pytest.raises(OutOfRegimeError):
        drag_coefficient(0.0)


def test_settling_examples():
    # Stokes; identical under both laws
    assert settling_velocity(2e-6, 11.2, ENV) == pytest.approx(1.1379921263157894e-4, rel=1e-12)
    assert settling_velocity(2e-6, 11.2, ENV, "derived") == pytest.approx(1.1379921263157894e-4, rel=1e-10)
    # Re ~ 61.7 with v_c = 10 m/s
    assert settling_velocity(1e-4, 10.0, ENV) == pytest.approx(0.012018230251086448, rel=1e-12)
    assert settling_velocity(1e-3, 11.2, ENV) == pytest.approx(0.029689217543202414, rel=1e-12)


def test_settling_out_of_regime():
    with pytest.raises(OutOfRegimeError):
        settling_velocity(2e-3, 2000.0, ENV)


@settings(max_examples=200, deadline=None)
@given(d=st.floats(1e-7, 3e-3), v_c=st.floats(0, 100))
def test_regime_partition_matches_drag_branch(d, v_c):
    Re = reynolds(d, v_c, ENV)
    regime = flow_regime(Re)
    drho = ENV.rho_d - ENV.rho_a
    formulas = {
        "stokes": ENV.g * d**2 * drho / (18 * ENV.mu_a),
        "intermediate": ENV.g * d**1.6 * drho / (13.875 * ENV.rho_d**0.4 * ENV.mu_a**0.6),
        "newton": 3.03 * ENV.g * d * drho / ENV.rho_d,
    }
    matches = [k for k, v in formulas.items() if settling_velocity(d, v_c, ENV) == pytest.approx(v, rel=1e-14)]
    assert regime in matches
    if Re > 0:
        cd = drag_coefficient(Re)
        branch = {"stokes": 24 / Re, "intermediate": 18.5 / Re**0.6, "newton": 0.44}[regime]
        assert cd == pytest.approx(branch, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(1e-7, 3.5e-5))
def test_force_balance_reproduces_stokes(d):
    v = settling_velocity(d, 0.0, ENV, "derived")
    assert reynolds(d, v, ENV) < 2
    assert v == pytest.approx(ENV.g * d**2 * (ENV.rho_d - ENV.rho_a) / (18 * ENV.mu_a), rel=1e-10)


def test_force_balance_satisfied_in_newton_regime():
    d = 2e-3
    v = settling_velocity(d, 0.0, ENV, "derived")
    Re = reynolds(d, v, ENV)
    assert flow_regime(Re) == "newton"
    lhs = 3 * ENV.rho_a * drag_coefficient(Re) * v * v
    assert lhs == pytest.approx(4 * d * ENV.g * (ENV.rho_d - ENV.rho_a), rel=1e-10)


def test_lambda_step():
    assert lambda_step(0.0, 0.01, 0.5, 0.2116, 0.1) == 0.0
    assert lambda_step(1000.0, 0.0, 0.5, 0.2116, 0.1) == 0.0
    assert lambda_step(1000.0, 0.01, 0.5, 0.2116, 0.1) == pytest.approx(-14.177693761814744, rel=1e-12)
    with pytest.raises(SingularGeometryError):
        lambda_step(10.0, 0.01, 0.0, 0.2116, 0.1)


@settings(max_examples=100)
@given(lam=st.floats(0, 1e7), v_s=st.floats(0, 1), s=st.floats(1e-3, 10))
def test_lambda_never_increases(lam, v_s, s):
    assert lambda_step(lam, v_s, s, 0.2116, 0.1) <= 0


def test_sample_count_zero_consumes_nothing():
    rng = np.random.default_rng(1)
    assert sample_count(0.0, rng) == 0.0
    assert rng.normal() == np.random.default_rng(1).normal()


def test_sample_count_statistics():
    rng = np.random.default_rng(20240)
    draws = np.array([sample_count(1600.0, rng) for _ in range(100_000)])
    assert abs(draws.mean() - 1600.0) < 3 * math.sqrt(1600.0 / 1e5)


def test_sample_count_deterministic_and_clamped():
    a = sample_count(1e6, np.random.default_rng(7))
    b = sample_count(1e6, np.random.default_rng(7))
    assert a == b
    rng = np.random.default_rng(3)
    assert min(sample_count(0.2, rng) for _ in range(2000)) == 0.0


def test_buoyant_mass(cfg):
    assert buoyant_mass([0.0] * 17, cfg) == 0.0
    one = ScenarioConfig(classes=(DropletClass(1e-3, 12),))
    assert buoyant_mass([12.0], one) == pytest.approx(6.233045488428292e-06, rel=1e-12)
    # summed in a different order, class by class
    by_hand = 0.0
    for c in reversed(cfg.classes):
        by_hand += (993.0 - 0.98) * math.pi * c.diameter**3 / 6 * c.initial_count
    total = buoyant_mass([c.initial_count for c in cfg.classes], cfg)
    assert total == pytest.approx(by_hand, rel=1e-12)
    top3 = sum((993.0 - 0.98) * c.volume * c.initial_count for c in cfg.classes[-3:])
    assert top3 / total > 0.9


def test_cloud_density(cfg):
    counts = [c.initial_count for c in cfg.classes]
    assert cloud_density([0.0] * 17, 0.3, cfg) == cfg.environment.rho_a
    vol = cfg.transmitter.eta * (cfg.transmitter.alpha_e * 0.1) ** 3
    assert cloud_density(counts, 0.1, cfg) == pytest.approx(1.172 + buoyant_mass(counts, cfg) / vol, rel=1e-12)
    rho = [cloud_density(counts, s, cfg) for s in np.geomspace(0.01, 100, 40)]
    assert all(b < a for a, b in zip(rho, rho[1:]))
    assert rho[-1] == pytest.approx(1.172, rel=1e-9)
    with pytest.raises(SingularGeometryError):
        cloud_density(counts, 0.0, cfg)

"""Droplet population inside the cloud: settling, counting noise, aggregates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError, OutOfRegimeError, SingularGeometryError
from .trajectory import bracketed_root

RE_STOKES_MAX = 2.0
RE_INTERMEDIATE_MAX = 500.0
RE_NEWTON_MAX = 2e5


@dataclass(frozen=True)
class ClassState:
    class_index: int
    lam: float      # mean count
    count: float    # sampled (or mean) count after reception
    v_s: float      # settling velocity, m/s
    Re: float


def reynolds(d, v_c, env):
    return d * env.rho_a * v_c / env.mu_a


def flow_regime(Re):
    """``'stokes'``, ``'intermediate'`` or ``'newton'``; the boundary Re = 2 is intermediate."""
    if Re < 0:
        raise InvalidParameterError(f"Reynolds number must be >= 0, got {Re!r}")
    if Re < RE_STOKES_MAX:
        return "stokes"
    if Re <= RE_INTERMEDIATE_MAX:
        return "intermediate"
    if Re <= RE_NEWTON_MAX:
        return "newton"
    raise OutOfRegimeError(f"Re={Re:.6g} exceeds the Newton regime limit {RE_NEWTON_MAX:g}")


def drag_coefficient(Re):
    if not Re > 0:
        raise OutOfRegimeError(f"drag coefficient needs Re > 0, got {Re!r}")
    regime = flow_regime(Re)
    if regime == "stokes":
        return 24.0 / Re
    if regime == "intermediate":
        return 18.5 / Re**0.6
    return 0.44


def _settling_tabulated(d, regime, env):
    drho = env.rho_d - env.rho_a
    if regime == "stokes":
        return env.g * d**2 * drho / (18.0 * env.mu_a)
    if regime == "intermediate":
        return env.g * d**1.6 * drho / (13.875 * env.rho_d**0.4 * env.mu_a**0.6)
    return 3.03 * env.g * d * drho / env.rho_d


def _settling_force_balance(d, env):
    """Terminal speed where weight minus buoyancy equals drag, C_D evaluated at its own Re."""
    weight = 4.0 * d * env.g * (env.rho_d - env.rho_a)

    def h(v):
        if v == 0.0:
            return -weight
        return 3.0 * env.rho_a * drag_coefficient(reynolds(d, v, env)) * v * v - weight

    hi = env.g * d**2 * (env.rho_d - env.rho_a) / (18.0 * env.mu_a)
    while h(hi) < 0:
        hi *= 2.0
        if reynolds(d, hi, env) > 2 * RE_NEWTON_MAX:
            break
    v, _ = bracketed_root(h, 0.0, hi, xtol=1e-15, ftol=1e-14 * weight)
    flow_regime(reynolds(d, v, env))
    return v


def settling_velocity(d, v_c, env, law="paper"):
    """Settling speed of a droplet of diameter ``d`` carried at cloud speed ``v_c``.

    ``law="paper"`` picks the tabulated closed form for the regime given by
    the cloud Reynolds number. ``law="derived"`` solves the drag force
    balance directly (Re from the settling speed itself, ambient density in
    the drag term); it ignores ``v_c``.
    """
    if not d > 0 or v_c < 0:
        raise InvalidParameterError(f"need d > 0 and v_c >= 0, got d={d!r}, v_c={v_c!r}")
    if law == "paper":
        return _settling_tabulated(d, flow_regime(reynolds(d, v_c, env)), env)
    if law == "derived":
        return _settling_force_balance(d, env)
    raise InvalidParameterError(f"unknown settling law {law!r}")


def lambda_step(lam, v_s, s, alpha_e, dt):
    """Change in mean count over one step from settling through the lower half-surface."""
    if s <= 0:
        raise SingularGeometryError("cloud has zero extent; settling rate is undefined at s = 0")
    if lam < 0 or dt <= 0:
        raise InvalidParameterError(f"need lam >= 0 and dt > 0, got lam={lam!r}, dt={dt!r}")
    return -3.0 * v_s * lam * dt / (2.0 * alpha_e * s)


def sample_count(lam, rng):
    """One draw from N(lam, lam), clipped at zero. ``lam == 0`` consumes no randomness."""
    if lam < 0:
        raise InvalidParameterError(f"lam must be >= 0, got {lam!r}")
    if lam == 0:
        return 0.0
    return max(float(rng.normal(lam, math.sqrt(lam))), 0.0)


def buoyant_mass(counts, cfg):
    """Excess mass of the droplets over the exhaled air they displace (kg)."""
    drho = cfg.environment.rho_d - cfg.environment.rho_f
    return sum(drho * c.volume * n for c, n in zip(cfg.classes, counts, strict=True))


def cloud_density(counts, s, cfg):
    if s <= 0:
        raise SingularGeometryError("cloud density is undefined at s = 0")
    tx = cfg.transmitter
    volume = tx.eta * (tx.alpha_e * s) ** 3
    return cfg.environment.rho_a + buoyant_mass(counts, cfg) / volume

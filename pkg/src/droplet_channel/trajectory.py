"""Path of the buoyant puff along its curvilinear axis.

The cloud is a growing sphere (radius ``alpha_e * s``) pushed by a constant
horizontal momentum and a constant buoyant force. Integrating the momentum
balance from rest gives a quartic in the travelled distance ``s``::

    (eta alpha_e^3 rho_a / 4) s^4 + Z s = integral_0^t |I(tau)| dtau

which is solved numerically at every time step with the buoyant mass ``Z``
frozen over the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidStepError, NumericalFailure, InvalidParameterError

ROOT_XTOL = 1e-12   # m
ROOT_MAXITER = 200


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    s: float
    theta: float
    r: float
    x: float
    y: float
    z: float
    v_c: float


def initial_point(tx):
    x, y, z = tx.position
    return TrajectoryPoint(t=0.0, s=0.0, theta=tx.theta0, r=0.0, x=x, y=y, z=z, v_c=tx.v_c0)


def momentum_components(t, tx):
    """Horizontal and vertical momentum of the cloud at time ``t``."""
    ix = tx.I0 * math.cos(tx.theta0)
    iy = tx.F0 * t + tx.I0 * math.sin(tx.theta0)
    return ix, iy


def displacement_rhs(t, tx):
    """Integral of the momentum magnitude from 0 to ``t`` (closed form).

    With ``u = F0 t + I0 sin(theta0)`` and ``c = I0 cos(theta0)`` the
    antiderivative is ``(u q + c^2 asinh(u/c)) / (2 F0)``, ``q = hypot(u, c)``.
    The asinh spelling equals the usual ``log(u + q)`` up to a constant but
    does not cancel catastrophically when ``u`` is large and negative.
    """
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t!r}")
    if t == 0:
        return 0.0
    I0, F0, th0 = tx.I0, tx.F0, tx.theta0
    sin0 = math.sin(th0)
    c = I0 * math.cos(th0)
    if F0 == 0.0:
        return I0 * t
    if F0 * t < 1e-7 * I0:
        # series in F0: the closed form loses digits to cancellation here
        return I0 * t + 0.5 * F0 * sin0 * t**2 + F0**2 * c**2 * t**3 / (6.0 * I0**3)
    u0 = I0 * sin0
    u1 = F0 * t + u0
    q0 = math.hypot(u0, c)
    q1 = math.hypot(u1, c)
    return (u1 * q1 - u0 * q0 + c**2 * (math.asinh(u1 / c) - math.asinh(u0 / c))) / (2.0 * F0)


def quartic_coefficient(tx, env):
    return tx.eta * tx.alpha_e**3 * env.rho_a / 4.0


def bracketed_root(f, lo, hi, flo=None, fhi=None, xtol=ROOT_XTOL, ftol=0.0, maxiter=ROOT_MAXITER):
    """Root of ``f`` in ``[lo, hi]`` by Illinois regula falsi with bisection fallback.

    Requires a sign change over the bracket. Stops when ``|f| <= ftol`` or the
    bracket is narrower than ``xtol``. Returns ``(root, iterations)``; raises
    NumericalFailure if neither happens within ``maxiter`` evaluations.
    """
    flo = f(lo) if flo is None else flo
    fhi = f(hi) if fhi is None else fhi
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if (flo > 0) == (fhi > 0):
        raise NumericalFailure("root is not bracketed", bracket=(lo, hi), f=(flo, fhi))
    side = 0
    width = hi - lo
    for it in range(1, maxiter + 1):
        x = (lo * fhi - hi * flo) / (fhi - flo)
        # fall back to bisection when the secant step stalls at an endpoint
        if not lo < x < hi or (it % 3 == 0 and hi - lo > 0.5 * width):
            x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= ftol:
            return x, it
        if (fx > 0) == (fhi > 0):
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
        else:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        if hi - lo <= xtol:
            return (lo if abs(flo) < abs(fhi) else hi), it
        if it % 3 == 0:
            width = hi - lo
    raise NumericalFailure("root finder did not converge", bracket=(lo, hi), iterations=maxiter)


def solve_s(t, Z, tx, env):
    """Distance travelled along the path at time ``t`` for buoyant mass ``Z``.

    The left side of the quartic is strictly increasing from 0 on s >= 0, so
    the positive root is unique. ``(rhs/a)^(1/4)`` is an upper bound; it is
    grown geometrically only if rounding leaves the sign unchanged there.
    """
    if t < 0 or Z < 0:
        raise InvalidParameterError(f"need t >= 0 and Z >= 0, got t={t!r}, Z={Z!r}")
    rhs = displacement_rhs(t, tx)
    if rhs == 0.0:
        return 0.0
    a = quartic_coefficient(tx, env)

    def f(s):
        return (a * s**3 + Z) * s - rhs

    hi = (rhs / a) ** 0.25
    fhi = f(hi)
    while fhi < 0:
        hi *= 2.0
        fhi = f(hi)
        if hi > 1e12:
            raise NumericalFailure("could not bracket displacement", t=t, Z=Z, bracket=(0.0, hi))
    try:
        s, _ = bracketed_root(f, 0.0, hi, -rhs, fhi, xtol=ROOT_XTOL * min(1.0, hi), ftol=1e-15 * rhs)
    except NumericalFailure as exc:
        raise NumericalFailure("displacement solve failed", t=t, Z=Z, **exc.context) from None
    return s


def theta_at(t, tx):
    """Direction of travel (rad above horizontal) at time ``t``."""
    return math.atan(tx.F0 * t / (tx.I0 * math.cos(tx.theta0)) + math.tan(tx.theta0))


def advance_position(prev, s_new, theta_new, dt, alpha_e, t=None):
    """Step the cloud centre along the new heading by the increment in ``s``.

    There is no force along z, so z is carried over unchanged. ``t`` overrides
    ``prev.t + dt`` so callers on a fixed grid avoid accumulating round-off.
    """
    ds = s_new - prev.s
    if ds < 0:
        raise InvalidStepError(f"displacement decreased from {prev.s!r} to {s_new!r}")
    return replace(
        prev,
        t=prev.t + dt if t is None else t,
        s=s_new,
        theta=theta_new,
        r=alpha_e * s_new,
        x=prev.x + ds * math.cos(theta_new),
        y=prev.y + ds * math.sin(theta_new),
        v_c=ds / dt,
    )

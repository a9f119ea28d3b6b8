"""Receiver face: cloud/face overlap, exposure accumulation, quantisation, threshold test.

The receiver is a disc of radius ``r_R`` in the plane ``x = x_R`` facing the
transmitter. The cloud sphere cuts that plane in a circle of radius ``r_CS``;
droplets are received in proportion to the area shared by the two circles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NONE, PARTIAL, ENCOMPASSED = "none", "partial_overlap", "encompassed"


@dataclass(frozen=True)
class ReceptionRecord:
    t: float
    per_class_received: tuple   # quantised cumulative count per class
    reconstructed: tuple        # per-step inflow per class before accumulation
    N_R: int
    state: int
    branch: str = NONE
    area: float = 0.0
    factor: float = 0.0


def cross_section_radius(r_cloud, x_cloud, x_R):
    """Radius of the sphere's slice by the plane ``x = x_R``; None when the plane misses it."""
    offset = x_R - x_cloud
    if abs(offset) > r_cloud:
        return None
    return math.sqrt(max(r_cloud * r_cloud - offset * offset, 0.0))


def center_distance(receiver, y_cloud, z_cloud):
    _, y_R, z_R = receiver.position
    return math.hypot(y_R - y_cloud, z_R - z_cloud)


def overlap(r_R, r_CS, d_RC):
    """Shared area of two circles and which reception case applies.

    Containment of either circle in the other gives the smaller disc's area;
    the lens formula is only used strictly between the two tangencies.
    """
    if min(r_R, r_CS, d_RC) < 0:
        raise ValueError("radii and distance must be non-negative")
    if r_R == 0 or r_CS == 0 or d_RC >= r_R + r_CS:
        return 0.0, NONE
    if d_RC <= r_CS - r_R:
        return math.pi * r_R * r_R, ENCOMPASSED
    if d_RC <= r_R - r_CS:
        return math.pi * r_CS * r_CS, PARTIAL
    d, a, b = d_RC, r_R, r_CS
    if d * min(a, b) == 0.0:
        # centres coincide to within underflow; the smaller disc is covered
        return math.pi * min(a, b) ** 2, PARTIAL
    ca = min(1.0, max(-1.0, (d * d + a * a - b * b) / (2 * d * a)))
    cb = min(1.0, max(-1.0, (d * d + b * b - a * a) / (2 * d * b)))
    kite = (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)
    area = a * a * math.acos(ca) + b * b * math.acos(cb) - 0.5 * math.sqrt(max(kite, 0.0))
    return min(max(area, 0.0), math.pi * min(a, b) ** 2), PARTIAL


def intersection_area(r_R, r_CS, d_RC):
    return overlap(r_R, r_CS, d_RC)[0]


def reception_factor(v_c, area, r_cloud, eta, dt):
    """Fraction of the cloud's droplets swept through ``area`` in one step."""
    if area == 0.0:
        return 0.0
    return v_c * area * dt / (eta * r_cloud**3)


def reconstruct_class(v_c, area, count, r_cloud, eta, dt):
    return reception_factor(v_c, area, r_cloud, eta, dt) * count


def accumulate_quantize(history, factor):
    """Round-half-up of the current-step factor times each class's cumulative count.

    ``history`` has one row per elapsed step and one column per class (a
    1-D array is a single class). Returns the per-class integers; their sum is
    the received count.
    """
    h = np.asarray(history, dtype=float)
    totals = h.sum(axis=0) if h.ndim == 2 else h.sum()
    return np.atleast_1d(np.floor(factor * totals + 0.5).astype(np.int64))


def detect(N_R, gamma):
    """1 (infected) when the received count strictly exceeds the threshold."""
    return 1 if N_R > gamma else 0


def deplete(count, received):
    return max(count - received, 0.0)

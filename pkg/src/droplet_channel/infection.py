"""Closed-form infection probability from the mean droplet-count history."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistributionError, InvalidParameterError
from .params import PROBABILITY_FORMS
from .receiver import ENCOMPASSED, NONE, PARTIAL


@dataclass(frozen=True)
class ExposureMoments:
    omega1: float            # mean aggregate with the shared (lens) area
    omega2: float            # mean aggregate with the full receiver area
    variance_partial: float  # sum of rounded squared-factor terms
    branch: str

    @property
    def mean(self):
        if self.branch == PARTIAL:
            return self.omega1
        if self.branch == ENCOMPASSED:
            return self.omega2
        return 0.0


def exposure_moments(lambda_history, factor_rc, factor_r, branch):
    """Aggregate the rounded, factor-scaled mean counts over classes and elapsed steps.

    ``lambda_history`` holds one row per step 0..i and one column per class.
    The current step's factors scale every row. The variance uses the squared
    factor of the active branch.
    """
    lam = np.asarray(lambda_history, dtype=float)
    if np.any(lam < 0):
        raise InvalidParameterError("mean counts must be non-negative")
    if branch not in (NONE, PARTIAL, ENCOMPASSED):
        raise InvalidParameterError(f"unknown branch {branch!r}")
    omega1 = float(np.floor(factor_rc * lam + 0.5).sum())
    omega2 = float(np.floor(factor_r * lam + 0.5).sum())
    f = factor_r if branch == ENCOMPASSED else factor_rc
    variance = float(np.floor(f * f * lam + 0.5).sum())
    return ExposureMoments(omega1, omega2, variance, branch)


def q_function(x):
    """Upper tail of the standard normal."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def received_pdf(n, moments):
    if moments.branch == NONE:
        return 0.0
    mean, var = moments.mean, moments.variance_partial
    if var == 0:
        if n == mean:
            raise DegenerateDistributionError(f"zero-variance received count evaluated at its mean {mean}")
        return 0.0
    return math.exp(-((n - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def infection_probability(gamma, moments, form="as_printed"):
    """P(received count > gamma).

    ``as_printed`` evaluates ``Q(gamma/Omega - Omega)``; ``moment_consistent``
    evaluates ``Q((gamma - Omega)/sqrt(variance))`` from the Gaussian density
    of the received count. A zero mean (or zero variance) collapses to a step.
    """
    if form not in PROBABILITY_FORMS:
        raise InvalidParameterError(f"form must be one of {PROBABILITY_FORMS}, got {form!r}")
    if moments.branch == NONE:
        return 0.0
    mean = moments.mean
    if form == "as_printed":
        if mean == 0:
            return 1.0 if gamma < mean else 0.0
        return q_function(gamma / mean - mean)
    if moments.variance_partial == 0:
        return 1.0 if gamma < mean else 0.0
    return q_function((gamma - mean) / math.sqrt(moments.variance_partial))

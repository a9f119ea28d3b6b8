import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from droplet_channel.errors import DegenerateDistributionError, InvalidParameterError
from droplet_channel.infection import (
    ExposureMoments,
    exposure_moments,
    infection_probability,
    q_function,
    received_pdf,
)
from droplet_channel.receiver import ENCOMPASSED, NONE, PARTIAL


def test_moments_example():
    m = exposure_moments([[10.0]], 0.5, 0.5, PARTIAL)
    assert (m.omega1, m.omega2, m.variance_partial) == (5.0, 5.0, 3.0)
    assert m.mean == 5.0


def test_moments_sum_over_steps_and_classes():
    hist = [[10.0, 4.0], [8.0, 0.0]]
    m = exposure_moments(hist, 0.25, 1.0, ENCOMPASSED)
    # rounding is per term: 2.5->3, 1->1, 2->2, 0->0
    assert m.omega1 == 6.0
    assert m.omega2 == 22.0
    assert m.variance_partial == 22.0
    assert m.mean == 22.0
    assert exposure_moments(hist, 0.25, 1.0, NONE).mean == 0.0


def test_moments_validation():
    with pytest.raises(InvalidParameterError):
        exposure_moments([[-1.0]], 0.5, 0.5, PARTIAL)
    with pytest.raises(InvalidParameterError):
        exposure_moments([[1.0]], 0.5, 0.5, "sideways")


@pytest.mark.parametrize("x,expected", [(0.0, 0.5), (1.6449, 0.04999521746834631), (-1.6449, 1 - 0.04999521746834631)])
def test_q_function(x, expected):
    assert q_function(x) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=200)
@given(x=st.floats(-8, 8))
def test_q_function_matches_normal_tail(x):
    assert q_function(x) == pytest.approx(stats.norm.sf(x), rel=1e-10, abs=1e-300)


def test_pdf_normalised_and_peaked():
    m = ExposureMoments(40.0, 60.0, 25.0, PARTIAL)
    total, _ = integrate.quad(lambda n: received_pdf(n, m), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert received_pdf(40.0, m) == pytest.approx(1 / math.sqrt(2 * math.pi * 25.0), rel=1e-12)
    assert received_pdf(40.0, m) > received_pdf(41.0, m)


def test_pdf_degenerate():
    m = ExposureMoments(3.0, 3.0, 0.0, PARTIAL)
    assert received_pdf(2.0, m) == 0.0
    with pytest.raises(DegenerateDistributionError):
        received_pdf(3.0, m)
    assert received_pdf(1.0, ExposureMoments(1.0, 1.0, 1.0, NONE)) == 0.0


def test_probability_matches_pdf_tail():
    m = ExposureMoments(40.0, 60.0, 25.0, PARTIAL)
    for gamma in (0.0, 35.0, 40.0, 52.0):
        tail, _ = integrate.quad(lambda n: received_pdf(n, m), gamma, np.inf)
        assert infection_probability(gamma, m, "moment_consistent") == pytest.approx(tail, rel=1e-8, abs=1e-12)


def test_probability_forms():
    m = ExposureMoments(4.0, 9.0, 2.0, PARTIAL)
    assert infection_probability(8.0, m, "as_printed") == pytest.approx(q_function(8 / 4 - 4), rel=1e-14)
    assert infection_probability(8.0, m, "moment_consistent") == pytest.approx(q_function(4 / math.sqrt(2)), rel=1e-14)
    enc = ExposureMoments(4.0, 9.0, 2.0, ENCOMPASSED)
    assert infection_probability(8.0, enc, "as_printed") == pytest.approx(q_function(8 / 9 - 9), rel=1e-14)
    assert infection_probability(0.0, ExposureMoments(0, 0, 0, NONE)) == 0.0
    with pytest.raises(InvalidParameterError):
        infection_probability(1.0, m, "exact")


def test_probability_zero_mean_and_zero_variance():
    zero = ExposureMoments(0.0, 0.0, 0.0, PARTIAL)
    assert infection_probability(0.0, zero, "as_printed") == 0.0
    assert infection_probability(-1.0, zero, "as_printed") == 1.0
    flat = ExposureMoments(5.0, 5.0, 0.0, PARTIAL)
    assert infection_probability(4.0, flat, "moment_consistent") == 1.0
    assert infection_probability(5.0, flat, "moment_consistent") == 0.0


@settings(max_examples=200)
@given(mean=st.floats(0.5, 1e4), var=st.floats(0.5, 1e4), g1=st.floats(0, 2e4), g2=st.floats(0, 2e4))
def test_probability_non_increasing_in_gamma(mean, var, g1, g2):
    lo, hi = sorted((g1, g2))
    m = ExposureMoments(mean, mean, var, PARTIAL)
    for form in ("as_printed", "moment_consistent"):
        p_lo, p_hi = infection_probability(lo, m, form), infection_probability(hi, m, form)
        assert 0.0 <= p_hi <= p_lo <= 1.0

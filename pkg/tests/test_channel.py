import math

import mpmath
import numpy as np
import pytest

from leohap.channel import (
    BufferState,
    LinkRates,
    RadioParams,
    buffered_hop_rates,
    e2e_rate,
    link_capacity,
    link_distance,
)

RP = RadioParams()


def test_distance_examples():
    assert link_distance([0, 0, 0], [3e6, 4e6, 0]) == 5e6
    assert link_distance([1, 2, 3], [1, 2, 3]) == 0.0
    assert link_distance([0, 0, 0], [0, 0, 550e3]) == 550e3


def mp_capacity(d, g0, alpha, b):
    with mpmath.workdps(50):
        return float(b * mpmath.log(1 + g0 / mpmath.mpf(d) ** alpha, 2))


def test_capacity_unit_distance():
    assert link_capacity(1.0, RP) == pytest.approx(mp_capacity(1, 1e9, 2, 1e9), rel=1e-12)
    assert link_capacity(1.0, RP) == pytest.approx(2.98974e10, rel=1e-5)


def test_capacity_snr_one():
    assert link_capacity(math.sqrt(1e9), RP) == pytest.approx(1e9, rel=1e-12)


def test_capacity_direct_link():
    se = link_capacity(4e6, RP) / RP.bandwidth
    assert se == pytest.approx(math.log2(1 + 6.25e-5), rel=1e-12)
    assert se == pytest.approx(9.0157e-5, rel=1e-4)


def test_capacity_rejects_zero_distance():
    with pytest.raises(ValueError):
        link_capacity(0.0, RP)


def test_capacity_tiny_snr_keeps_precision():
    # log1p keeps relative accuracy where log2(1 + x) would round to 0
    d = 1e12
    assert link_capacity(d, RP) == pytest.approx(mp_capacity(d, 1e9, 2, 1e9), rel=1e-12)


def test_e2e_examples():
    assert e2e_rate(3, 1, 2) == 1
    assert e2e_rate(2.5, 2.5, 2.5) == 2.5
    assert e2e_rate(0, 7, 9) == 0


def test_buffered_empty_buffers_is_min_chain():
    (r1, r2, r3), _ = buffered_hop_rates(LinkRates(1, 5, 5, 1), BufferState())
    assert (r1, r2, r3) == (1, 1, 1)


def test_buffered_full_buffer_decouples():
    (_, r2, _), _ = buffered_hop_rates(LinkRates(1, 5, 3, 1), BufferState(q_sat=1e30, q_hap=0))
    assert r2 == 5


def test_buffered_hand_example():
    (r1, r2, r3), buf = buffered_hop_rates(LinkRates(2, 3, 4, 2), BufferState(1.0, 0.0))
    assert (r1, r2, r3) == (2, 3, 3)
    assert buf.q_sat == 0.0 and buf.q_hap == 0.0


def test_buffer_rejects_negative():
    with pytest.raises(ValueError):
        BufferState(-1.0, 0.0)


def test_radio_params_validation():
    with pytest.raises(ValueError):
        RadioParams(bandwidth=0.0)

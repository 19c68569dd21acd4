import math

import pytest
from hypothesis import given, strategies as st

from rbebp.errors import InvalidParameter
from rbebp.radio import (
    RadioParams,
    aggregation_energy,
    crossover_distance,
    rx_energy,
    tx_energy,
)

REL = 1e-12


def test_crossover_table1():
    # sqrt(10 / 0.0013) evaluated by hand: 87.70580...
    assert crossover_distance(10e-12, 0.0013e-12) == pytest.approx(87.7058, abs=1e-3)
    assert RadioParams().d0 == math.sqrt(10e-12 / 0.0013e-12)


@pytest.mark.parametrize("fs,mp,expected", [(3.0, 3.0, 1.0), (4.0, 1.0, 2.0)])
def test_crossover_trivial(fs, mp, expected):
    assert crossover_distance(fs, mp) == expected


@pytest.mark.parametrize("fs,mp", [(0, 1), (1, 0), (-1, 1)])
def test_crossover_rejects_nonpositive(fs, mp):
    with pytest.raises(InvalidParameter):
        crossover_distance(fs, mp)


def test_radio_params_validation():
    with pytest.raises(InvalidParameter):
        RadioParams(e_elec=0)
    with pytest.raises(InvalidParameter):
        RadioParams(packet_bits=0)
    with pytest.raises(InvalidParameter):
        RadioParams(eps_mp=-1)
    with pytest.raises(TypeError):
        RadioParams(d0=5.0)
    assert RadioParams(e_da=0).e_da == 0


def test_tx_free_space_branch(radio):
    assert tx_energy(radio, 2000, 50) == pytest.approx(150e-6, rel=REL)


def test_tx_multipath_branch(radio):
    assert tx_energy(radio, 2000, 100) == pytest.approx(360e-6, rel=REL)


def test_tx_zero_distance(radio):
    assert tx_energy(radio, 2000, 0) == 2000 * radio.e_elec


def test_tx_errors(radio):
    with pytest.raises(InvalidParameter):
        tx_energy(radio, 2000, -1)
    with pytest.raises(InvalidParameter):
        tx_energy(radio, 0, 10)


def test_rx(radio):
    assert rx_energy(radio, 2000) == pytest.approx(100e-6, rel=REL)
    assert rx_energy(radio, 1) == radio.e_elec
    assert rx_energy(radio, 4000) == pytest.approx(200e-6, rel=REL)
    with pytest.raises(InvalidParameter):
        rx_energy(radio, 0)


def test_aggregation(radio):
    assert aggregation_energy(radio, 2000, 0) == 0
    assert aggregation_energy(radio, 2000, 1) == pytest.approx(10e-6, rel=REL)
    assert aggregation_energy(radio, 2000, 10) == pytest.approx(100e-6, rel=REL)
    with pytest.raises(InvalidParameter):
        aggregation_energy(radio, 2000, -1)


def test_branch_switches_exactly_at_d0(radio):
    d0 = radio.d0
    below = math.nextafter(d0, 0)
    k = 2000
    assert tx_energy(radio, k, below) == k * radio.e_elec + k * radio.eps_fs * below**2
    assert tx_energy(radio, k, d0) == k * radio.e_elec + k * radio.eps_mp * d0**4


distances = st.floats(min_value=0, max_value=5000, allow_nan=False)
bits = st.integers(min_value=1, max_value=100_000)


@given(k=bits, a=distances, b=distances)
def test_tx_monotone_in_distance_within_branch(k, a, b):
    radio = RadioParams()
    lo, hi = sorted((a, b))
    # Gaps below 1 mm vanish in double precision next to the e_elec term.
    if hi - lo < 1e-3 or (lo < radio.d0) != (hi < radio.d0):
        return
    assert tx_energy(radio, k, lo) < tx_energy(radio, k, hi)


@given(k=bits, d=distances)
def test_tx_monotone_in_bits_and_at_least_rx(k, d):
    radio = RadioParams()
    assert tx_energy(radio, k + 1, d) > tx_energy(radio, k, d)
    assert tx_energy(radio, k, d) >= rx_energy(radio, k)


@given(k=bits, d=distances, n=st.integers(min_value=0, max_value=50))
def test_linear_in_bits(k, d, n):
    radio = RadioParams()
    assert tx_energy(radio, 2 * k, d) == pytest.approx(2 * tx_energy(radio, k, d), rel=REL)
    assert rx_energy(radio, 2 * k) == pytest.approx(2 * rx_energy(radio, k), rel=REL)
    assert aggregation_energy(radio, 2 * k, n) == pytest.approx(2 * aggregation_energy(radio, k, n), rel=REL)

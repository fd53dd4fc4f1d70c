import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catm.hilbert import (ChannelBasis, ExtendedVector, Representation, TimeGrid, apply_time_derivative,
                          band_limited_values, fourier_coefficients, mode_numbers, to_fourier, to_time_grid)

EPS = np.finfo(float).eps


def naive_dft(values, N):
    """Coefficients c_n = N^{-1/2} sum_i x_i exp(+i n w t_i), n = -N/2..N/2-1."""
    n = mode_numbers(N)
    i = np.arange(N)
    return values @ np.exp(2j * np.pi * np.outer(i, n) / N) / np.sqrt(N)


def test_channel_basis_validation():
    b = ChannelBasis([0.0, 0.5], [True, False])
    assert b.n_channels == 2
    assert list(b.bound_flags) == [True, False]
    with pytest.raises(ValueError):
        ChannelBasis([])
    with pytest.raises(ValueError):
        ChannelBasis([0.0, np.inf])
    with pytest.raises(ValueError):
        ChannelBasis([0.0, 1.0], [True])


def test_time_grid_invariants():
    g = TimeGrid(10.0, 5.0, 16)
    assert g.T == 15.0
    assert g.points[0] == 0.0 and g.points[-1] < g.T
    assert np.allclose(np.diff(g.points), g.spacing)
    for bad in [(0.0, 1.0, 16), (1.0, 0.0, 16), (1.0, 1.0, 12), (1.0, 1.0, 1)]:
        with pytest.raises(ValueError):
            TimeGrid(*bad)


@pytest.mark.parametrize("frac", [0.5, 1.0, 1.5])
def test_aligned_grid_hits_T0(frac):
    g = TimeGrid.aligned(187.3, 256, frac)
    assert g.points[g.physical_index] == pytest.approx(187.3, abs=1e-12)
    assert g.physical_mask.sum() == g.physical_index + 1


def test_constant_row_maps_to_mode_zero():
    N = 32
    x = ExtendedVector(np.full((1, N), 0.7 - 0.2j), grid=TimeGrid(1.0, 1.0, N))
    c = to_fourier(x).amplitudes[0]
    zero = np.flatnonzero(mode_numbers(N) == 0)[0]
    assert c[zero] == pytest.approx((0.7 - 0.2j) * np.sqrt(N), abs=1e-13)
    assert np.max(np.abs(np.delete(c, zero))) < 1e-13


def test_basis_function_maps_to_one_mode():
    g = TimeGrid(3.0, 1.0, 64)
    row = np.exp(-1j * g.omega * g.points)
    c = fourier_coefficients(row)
    one = np.flatnonzero(mode_numbers(64) == 1)[0]
    assert abs(c[one]) == pytest.approx(8.0, abs=1e-12)
    assert np.max(np.abs(np.delete(c, one))) < 1e-12


def test_forward_transform_matches_naive_sum(rng):
    x = rng.normal(size=(4, 64)) + 1j * rng.normal(size=(4, 64))
    assert np.max(np.abs(fourier_coefficients(x) - naive_dft(x, 64))) < 1e-12


def test_single_mode_minus_two_on_grid():
    g = TimeGrid(2.0, 2.0, 16)
    c = np.zeros((1, 16), complex)
    c[0, np.flatnonzero(mode_numbers(16) == -2)[0]] = 1.0
    x = to_time_grid(ExtendedVector(c, Representation.FOURIER, g)).amplitudes[0]
    assert np.max(np.abs(x - np.exp(2j * g.omega * g.points) / 4.0)) < 1e-14


def test_round_trip_and_zero(rng):
    g = TimeGrid(1.0, 1.0, 128)
    x = ExtendedVector(rng.normal(size=(3, 128)) + 1j * rng.normal(size=(3, 128)), grid=g)
    back = to_time_grid(to_fourier(x))
    assert np.linalg.norm(back.amplitudes - x.amplitudes) <= 10 * EPS * x.norm()
    z = ExtendedVector(np.zeros((2, 128)), grid=g)
    assert not np.any(to_time_grid(to_fourier(z)).amplitudes)


def test_representation_tags_enforced():
    g = TimeGrid(1.0, 1.0, 8)
    x = ExtendedVector(np.ones((1, 8)), grid=g)
    with pytest.raises(ValueError):
        to_time_grid(x)
    with pytest.raises(ValueError):
        to_fourier(to_fourier(x))
    with pytest.raises(ValueError):
        ExtendedVector(np.ones((1, 4)), grid=g)


def test_derivative_examples():
    g = TimeGrid(np.pi, np.pi, 16)
    const = ExtendedVector(np.ones((2, 16)), grid=g)
    assert np.max(np.abs(apply_time_derivative(const).amplitudes)) < 1e-14
    c = np.zeros((1, 16), complex)
    one = np.flatnonzero(mode_numbers(16) == 1)[0]
    c[0, one] = 1.0
    d = apply_time_derivative(ExtendedVector(c, Representation.FOURIER, g))
    assert d.representation is Representation.FOURIER
    assert d.amplitudes[0, one] == pytest.approx(-1.0)


def test_derivative_of_sine_matches_finite_differences():
    g = TimeGrid(4.0, 4.0, 64)
    t, h = g.points, 1e-4
    x = ExtendedVector(np.sin(g.omega * t)[None], grid=g)
    d = apply_time_derivative(x).amplitudes[0]
    fd = (np.sin(g.omega * (t + h)) - np.sin(g.omega * (t - h))) / (2 * h)
    assert np.max(np.abs(d - (-1j) * fd)) < 1e-8


def test_band_limited_values_interpolate_grid(rng):
    g = TimeGrid(2.0, 3.0, 32)
    x = rng.normal(size=(2, 32)) + 1j * rng.normal(size=(2, 32))
    v = band_limited_values(fourier_coefficients(x), g, g.points)
    assert np.max(np.abs(v - x)) < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.sampled_from([8, 16, 64]), st.integers(0, 2**32 - 1))
def test_parseval_and_round_trip(n, N, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, N)) + 1j * rng.normal(size=(n, N))
    c = fourier_coefficients(x)
    nx = np.linalg.norm(x)
    assert abs(np.linalg.norm(c) - nx) <= 10 * EPS * nx
    assert np.linalg.norm(to_time_grid(ExtendedVector(c, Representation.FOURIER)).amplitudes - x) <= 1e-12 * nx


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([8, 32]), st.integers(0, 2**32 - 1))
def test_derivative_is_hermitian(N, seed):
    rng = np.random.default_rng(seed)
    g = TimeGrid(1.3, 0.7, N)
    x, y = (ExtendedVector(rng.normal(size=(2, N)) + 1j * rng.normal(size=(2, N)), grid=g) for _ in range(2))
    lhs = np.vdot(x.amplitudes, apply_time_derivative(y).amplitudes)
    rhs = np.conj(np.vdot(y.amplitudes, apply_time_derivative(x).amplitudes))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)

import numpy as np
import pytest
from conftest import random_state
from hypothesis import given, settings
from hypothesis import strategies as st

from catm.absorber import (AbsorberShape, AbsorberSpec, Gate, PotentialForm, TargetState,
                           analytic_interval_solution_corrected, analytic_interval_solution_first,
                           basis_matrix, block_stack, cumulative_profile, decay_factor, inverse_basis_matrix,
                           potential_block_corrected, potential_block_diagonal, potential_block_first, profile,
                           required_amplitude, select_anchor_channel, sized, vopt, window_absorber,
                           window_support)
from catm.hilbert import TimeGrid
from catm.oracle import IntervalForm, integrate_interval_ode

GRID = TimeGrid(40.0, 27.6, 64)
CONST = AbsorberSpec(AbsorberShape.CONSTANT, V0=1.0)


def test_select_anchor_channel():
    assert select_anchor_channel([0, 0, 1, 0]) == 2
    assert select_anchor_channel([0.6, 0.8]) == 1
    assert select_anchor_channel([2 ** -0.5, 2 ** -0.5]) == 0
    with pytest.raises(ValueError):
        select_anchor_channel([0.0, 0.0])


def test_target_state_validation():
    with pytest.raises(ValueError):
        TargetState(np.array([0.6, 0.6]), 0)
    with pytest.raises(ValueError):
        TargetState(np.array([0.6, 0.8]), 0)
    t = TargetState.from_vector([3.0, 4.0])
    assert t.anchor == 1 and np.allclose(t.ratios, [0.75, 1.0])


def test_basis_matrix_examples(rng):
    e = np.zeros(3, complex)
    e[1] = 1
    assert np.array_equal(basis_matrix(e, 1), np.eye(3))
    assert np.array_equal(inverse_basis_matrix(e, 1), np.eye(3))
    psi = np.array([0.6, 0.8, 0.0])
    B, Bi = basis_matrix(psi, 1), inverse_basis_matrix(psi, 1)
    assert np.allclose(B[:, 1], psi)
    assert Bi[0, 1] == pytest.approx(-0.75) and Bi[1, 1] == pytest.approx(1.25) and Bi[2, 1] == 0
    assert np.allclose(Bi, np.linalg.inv(B), atol=1e-15)
    for _ in range(20):
        t = TargetState.from_vector(random_state(rng, 8))
        assert np.max(np.abs(basis_matrix(t.psi0, t.anchor) @ inverse_basis_matrix(t.psi0, t.anchor)
                             - np.eye(8))) < 1e-13
    with pytest.raises(ValueError):
        basis_matrix(np.array([1.0, 1e-11]), 1)


def test_vopt_examples():
    assert vopt(CONST, GRID, 20.0) == 0
    assert vopt(CONST, GRID, GRID.T0 + GRID.dT / 2) == pytest.approx(-1j)
    ramp = AbsorberSpec(AbsorberShape.SMOOTH_RAMP, V0=1.0, ramp_fraction=0.1)
    t = np.linspace(GRID.T0, GRID.T, 20001)
    p = profile(ramp, GRID, t)
    assert p[0] == 0.0 and profile(ramp, GRID, np.nextafter(GRID.T0, np.inf)) < 1e-20
    assert np.max(np.abs(np.diff(p))) < 1e-3


@pytest.mark.parametrize("spec", [CONST, AbsorberSpec(AbsorberShape.SMOOTH_RAMP, V0=2.0),
                                  window_absorber()])
@pytest.mark.parametrize("gate", list(Gate))
def test_profile_is_null_on_physical_interval_and_absorbing_after(spec, gate):
    t = np.linspace(0.0, GRID.T, 4001)
    v = vopt(spec, GRID, t, gate)
    assert not np.any(v[t <= GRID.T0])
    assert np.all(v.imag <= 0) and np.all(v.real == 0)


def test_cumulative_profile_matches_quadrature():
    for spec in (AbsorberSpec(AbsorberShape.SMOOTH_RAMP, V0=1.0), window_absorber()):
        t = np.linspace(GRID.T0, GRID.T, 4001)
        p = profile(spec, GRID, t)
        trap = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(t))])
        assert np.max(np.abs(cumulative_profile(spec, GRID, t) - trap)) < 1e-5


def test_window_support_and_sizing():
    spec = sized(window_absorber(1e-12), GRID)
    Ts, Ta = window_support(spec, GRID)
    assert GRID.T0 < Ts < Ta < GRID.T
    assert not np.any(profile(spec, GRID, np.linspace(GRID.T0, Ts, 50)))
    assert decay_factor(spec, GRID, [0.0, 0.1], 0, 1) == pytest.approx(1e-12, rel=1e-9)


def test_potential_block_diagonal_examples():
    assert not np.any(potential_block_diagonal(CONST, GRID, 10.0, 0, 3))
    D = potential_block_diagonal(CONST, GRID, GRID.T0 + 5.0, 0, 3)
    assert np.allclose(D, np.diag([0, -1j, -1j]))
    assert np.trace(D) == pytest.approx(2 * vopt(CONST, GRID, GRID.T0 + 5.0))


def test_potential_block_first_examples(rng):
    t_i = GRID.T0 + 3.0
    e = TargetState(np.array([0, 1, 0], complex), 1)
    assert np.allclose(potential_block_first(CONST, GRID, t_i, e), potential_block_diagonal(CONST, GRID, t_i, 1, 3))
    for _ in range(10):
        target = TargetState.from_vector(random_state(rng, 5))
        l = target.anchor
        F = potential_block_first(CONST, GRID, t_i, target)
        D = potential_block_diagonal(CONST, GRID, t_i, l, 5)
        B, Bi = basis_matrix(target.psi0, l), inverse_basis_matrix(target.psi0, l)
        assert np.allclose(F, B @ D @ Bi, atol=1e-14)
        assert not np.any(F[l])


def test_potential_block_corrected_examples(rng):
    t_i = GRID.T0 + 3.0
    E = np.array([0.0, 0.3, 0.7])
    e = TargetState(np.array([1, 0, 0], complex), 0)
    assert np.allclose(potential_block_corrected(CONST, GRID, t_i, e, E),
                       potential_block_diagonal(CONST, GRID, t_i, 0, 3))
    target = TargetState.from_vector(random_state(rng, 3))
    assert np.allclose(potential_block_corrected(CONST, GRID, t_i, target, np.full(3, 0.2)),
                       potential_block_first(CONST, GRID, t_i, target))
    two = TargetState(np.array([0.8, 0.6], complex), 0)
    C = potential_block_corrected(CONST, GRID, t_i, two, [0.0, 0.5])
    assert C[1, 0] == pytest.approx(-0.75 * (-1j + 0.5))
    assert C[1, 1] == pytest.approx(-1j)
    assert not np.any(C[0])
    assert not np.any(potential_block_corrected(CONST, GRID, 10.0, two, [0.0, 0.5]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_corrected_block_keeps_target_stationary(n, seed):
    rng = np.random.default_rng(seed)
    E = rng.uniform(-1, 1, n)
    target = TargetState.from_vector(random_state(rng, n))
    V = block_stack(PotentialForm.CORRECTED, np.array([-1j * rng.uniform(0, 3)]), target.ratios, target.anchor, E)[0]
    lhs = (np.diag(E) + V) @ target.psi0
    assert np.allclose(lhs, E[target.anchor] * target.psi0, atol=1e-13)


def test_decay_factor_examples():
    E = [0.0, 0.4]
    assert decay_factor(AbsorberSpec(AbsorberShape.CONSTANT, V0=0.0), GRID, E, 0, 1) == pytest.approx(1.0)
    f = decay_factor(AbsorberSpec(AbsorberShape.CONSTANT, V0=1.0), GRID, E, 0, 1)
    assert f == pytest.approx(np.exp(-27.6), rel=1e-12) and f == pytest.approx(1.0e-12, rel=0.03)
    f2 = decay_factor(AbsorberSpec(AbsorberShape.CONSTANT, V0=2.0), GRID, E, 0, 1)
    assert f2 == pytest.approx(f * f, rel=1e-12)


def test_required_amplitude_examples():
    assert required_amplitude(1e-12, 27.6) == pytest.approx(1.0011, abs=1e-4)
    assert required_amplitude(1.0, 27.6) == 0.0
    with pytest.raises(ValueError):
        required_amplitude(0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-14, 1.0), st.floats(0.5, 500.0))
def test_required_amplitude_inverts_decay(eps, dT):
    grid = TimeGrid(10.0, dT, 16)
    spec = AbsorberSpec(AbsorberShape.CONSTANT, V0=required_amplitude(eps, dT))
    assert decay_factor(spec, grid, [0.0, 0.3], 0, 1) <= eps * (1 + 1e-12)


def _instance(rng, n, shape=AbsorberShape.CONSTANT):
    E = np.sort(rng.uniform(-0.5, 0.5, n))
    target = TargetState.from_vector(random_state(rng, n))
    lam = rng.normal(size=n) + 1j * rng.normal(size=n)
    spec = AbsorberSpec(shape, V0=float(rng.uniform(0.2, 1.0)))
    El = complex(E[target.anchor], rng.uniform(-0.1, 0.1) * spec.V0)
    return E, target, lam, spec, El


def test_interval_solutions_at_T0(rng):
    E, target, lam, spec, El = _instance(rng, 3)
    for f in (analytic_interval_solution_first, analytic_interval_solution_corrected):
        assert np.allclose(f(lam, spec, GRID, E, target.anchor, target, El, GRID.T0), lam, atol=1e-15)


def test_first_solution_free_phase_without_absorber(rng):
    E = np.array([0.0, 0.2, 0.5])
    lam = rng.normal(size=3) + 0j
    target = TargetState(np.array([1, 0, 0], complex), 0)
    spec = AbsorberSpec(AbsorberShape.CONSTANT, V0=0.0)
    t = GRID.T0 + 7.0
    out = analytic_interval_solution_first(lam, spec, GRID, E, 0, target, 0.1, t)
    assert np.allclose(out, lam * np.exp(1j * (0.1 - E) * 7.0), atol=1e-14)


def test_corrected_reduces_to_diagonal_first_for_basis_target(rng):
    E = np.array([0.0, 0.2, 0.5])
    lam = rng.normal(size=3) + 1j * rng.normal(size=3)
    target = TargetState(np.array([0, 1, 0], complex), 1)
    t = np.linspace(GRID.T0, GRID.T, 5)
    a = analytic_interval_solution_corrected(lam, CONST, GRID, E, 1, target, 0.2, t)
    b = analytic_interval_solution_first(lam, CONST, GRID, E, 1, target, 0.2, t)
    assert np.allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("shape", [AbsorberShape.CONSTANT, AbsorberShape.SMOOTH_RAMP])
def test_interval_solutions_match_ode(rng, shape):
    for n in (3, 4):
        E, target, lam, spec, El = _instance(rng, n, shape)
        l = target.anchor
        t = np.linspace(GRID.T0, GRID.T, 7)
        for form, fn in ((IntervalForm.CORRECTED, analytic_interval_solution_corrected),
                         (IntervalForm.FIRST, analytic_interval_solution_first)):
            ode = integrate_interval_ode(form, lam, spec, GRID, E, l, target, El, t_eval=t).states
            assert np.max(np.abs(fn(lam, spec, GRID, E, l, target, El, t) - ode)) < 1e-8


def test_corrected_closed_form_rejects_window():
    target = TargetState(np.array([1, 0], complex), 0)
    with pytest.raises(ValueError):
        analytic_interval_solution_corrected([1, 0], window_absorber(), GRID, [0, 1], 0, target, 0, GRID.T)

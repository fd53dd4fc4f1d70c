import numpy as np
import pytest

from catm.hilbert import ChannelBasis
from catm.models import (ATOMIC_INTENSITY, Envelope, ModelSystem, PulseSpec, coupling_operator, envelope_value,
                         field_amplitude, field_nodes, make_ladder, make_two_level)


def test_field_vanishes_outside_pulse(canonical_pulse):
    assert field_amplitude(canonical_pulse, -1.0) == 0.0
    assert field_amplitude(canonical_pulse, 750.0) == 0.0
    assert field_amplitude(canonical_pulse, 1e4) == 0.0


def test_intensity_conversion_and_first_peak(canonical_pulse):
    E0 = np.sqrt(1e13 / 3.50945e16)
    assert canonical_pulse.peak_amplitude == pytest.approx(E0, rel=1e-15)
    assert E0 == pytest.approx(1.688e-2, abs=5e-6)
    # The sin^2 ramp reaches 1 at t = T0 / 4 = 187.5.
    assert field_amplitude(canonical_pulse, 187.5) == pytest.approx(E0 * np.cos(0.335 * 187.5), rel=1e-14)


def test_field_bounded_and_continuous(canonical_pulse):
    t = np.linspace(-10.0, 760.0, 20001)
    f = field_amplitude(canonical_pulse, t)
    assert np.all(np.abs(f) <= canonical_pulse.peak_amplitude)
    assert np.max(np.abs(np.diff(f))) < 1e-3


def test_flat_envelope_and_validation():
    p = PulseSpec(10.0, 1.0, 0.1, Envelope.FLAT)
    assert envelope_value(p, 5.0) == 1.0
    with pytest.raises(ValueError):
        PulseSpec(0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        PulseSpec(10.0, 1.0, 0.1, ramp_fraction=0.7)
    assert ATOMIC_INTENSITY == 3.50945e16


def test_coupling_operator_examples(rng):
    m = make_two_level(1.0, 1.0)
    p = PulseSpec(10.0, 0.0, 0.5, Envelope.FLAT)
    W = coupling_operator(m, p, 1.0)
    assert W[0, 1] == pytest.approx(-0.5) and W[1, 0] == pytest.approx(-0.5)
    assert not np.any(coupling_operator(m, p, 10.0))
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    mh = ModelSystem(ChannelBasis(np.arange(4.0)), a + a.conj().T)
    Wr = coupling_operator(mh, PulseSpec(10.0, 0.7, 0.3), float(rng.uniform(0, 10)))
    assert np.allclose(Wr, Wr.conj().T, atol=1e-15)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSystem(ChannelBasis([0.0, 1.0]), np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(ValueError):
        make_ladder(4, 0.1, 0.2, 5)
    with pytest.raises(ValueError):
        make_two_level(-1.0, 1.0)


def test_factories():
    m = make_two_level(1.0, 1.0)
    assert list(m.energies) == [0.0, 1.0]
    assert m.dipole[0, 1] == m.dipole[1, 0] == 1.0
    lad = make_ladder(16, 0.1, 0.2, 14)
    assert lad.n_channels == 16
    assert list(lad.basis.bound_flags[-3:]) == [True, False, False]
    for model in (m, lad):
        assert np.array_equal(model.dipole, model.dipole.conj().T)
        assert not np.any(np.diag(model.dipole))


def test_field_nodes_basic(canonical_pulse):
    assert list(field_nodes(canonical_pulse, 1)) == [0.0, 750.0]
    b = field_nodes(canonical_pulse, 4)
    assert b[0] == 0.0 and b[-1] == 750.0 and np.all(np.diff(b) > 0)
    half = np.pi / canonical_pulse.carrier_frequency
    for k, t in enumerate(b[1:-1], start=1):
        assert abs(field_amplitude(canonical_pulse, t)) < 1e-8
        assert abs(t - 750.0 * k / 4) <= half


def test_field_nodes_of_pure_sine():
    wc = 0.5
    p = PulseSpec(40 * np.pi / wc, wc, 0.1, Envelope.FLAT, phase=np.pi / 2)
    b = field_nodes(p, 5)
    k = b[1:-1] / (np.pi / wc)
    assert np.max(np.abs(k - np.round(k))) < 1e-9


def test_field_nodes_too_many_steps():
    with pytest.raises(ValueError):
        field_nodes(PulseSpec(10.0, 0.1, 0.1), 5)

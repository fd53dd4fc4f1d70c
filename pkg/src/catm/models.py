"""Model systems (two-level, multichannel ladder) and the laser pulse."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .hilbert import ChannelBasis

# I [W/cm^2] = ATOMIC_INTENSITY * E0^2 [a.u.]
ATOMIC_INTENSITY = 3.50945e16


class Envelope(enum.Enum):
    SINE_SQUARED_RAMP = "sin2"
    FLAT = "flat"


@dataclass(frozen=True)
class PulseSpec:
    """Linearly polarized pulse E(t) = env(t) E0 cos(w_c t + phase) on [0, T0).

    Attributes:
        duration: T0, the pulse length.
        carrier_frequency: w_c.
        peak_amplitude: E0.
        envelope: envelope family.
        ramp_fraction: rise (and fall) time as a fraction of T0 for the sin^2 ramp.
        phase: carrier phase at t = 0.
    """

    duration: float
    carrier_frequency: float
    peak_amplitude: float
    envelope: Envelope = Envelope.SINE_SQUARED_RAMP
    ramp_fraction: float = 0.25
    phase: float = 0.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        if self.peak_amplitude < 0:
            raise ValueError("peak amplitude must be non-negative")
        if self.envelope is Envelope.SINE_SQUARED_RAMP and not 0 < self.ramp_fraction <= 0.5:
            raise ValueError("ramp_fraction must lie in (0, 0.5]")

    @classmethod
    def from_intensity(cls, duration: float, carrier_frequency: float, intensity: float, **kw) -> "PulseSpec":
        """Pulse with peak intensity given in W/cm^2."""
        return cls(duration, carrier_frequency, float(np.sqrt(intensity / ATOMIC_INTENSITY)), **kw)


def envelope_value(pulse: PulseSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    T0 = pulse.duration
    inside = (t >= 0) & (t < T0)
    if pulse.envelope is Envelope.FLAT:
        return np.where(inside, 1.0, 0.0)
    tr = pulse.ramp_fraction * T0
    rise = np.sin(0.5 * np.pi * np.clip(t, 0, tr) / tr) ** 2
    fall = np.sin(0.5 * np.pi * np.clip(T0 - t, 0, tr) / tr) ** 2
    return np.where(inside, np.minimum(rise, fall), 0.0)


def field_amplitude(pulse: PulseSpec, t):
    """Electric field at time(s) t; exactly zero outside [0, T0)."""
    t = np.asarray(t, dtype=float)
    value = envelope_value(pulse, t) * pulse.peak_amplitude * np.cos(pulse.carrier_frequency * t + pulse.phase)
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class ModelSystem:
    """Channel basis plus a Hermitian transition dipole.

    Attributes:
        basis: free-system eigenbasis.
        dipole: (n, n) Hermitian matrix mu_jk.
        label: free-form description.
    """

    basis: ChannelBasis
    dipole: np.ndarray
    label: str = ""

    def __post_init__(self):
        mu = np.array(self.dipole, dtype=complex, ndmin=2)
        n = self.basis.n_channels
        if mu.shape != (n, n):
            raise ValueError(f"dipole must be {n}x{n}")
        if np.max(np.abs(mu - mu.conj().T), initial=0.0) > 1e-14:
            raise ValueError("dipole must be Hermitian")
        mu.setflags(write=False)
        object.__setattr__(self, "dipole", mu)

    @property
    def n_channels(self) -> int:
        return self.basis.n_channels

    @property
    def energies(self) -> np.ndarray:
        return self.basis.energies

    def hamiltonian(self, field_value: float) -> np.ndarray:
        """H0 - E mu for a single field value."""
        return np.diag(self.energies).astype(complex) - field_value * self.dipole


def coupling_operator(model: ModelSystem, pulse: PulseSpec, t: float) -> np.ndarray:
    """W(t) = -E(t) mu in the dipole gauge."""
    return -field_amplitude(pulse, float(t)) * model.dipole


def make_two_level(gap: float, dipole: float) -> ModelSystem:
    if gap <= 0:
        raise ValueError("gap must be positive")
    mu = np.array([[0.0, dipole], [dipole, 0.0]])
    return ModelSystem(ChannelBasis(np.array([0.0, gap])), mu, label="two-level")


def make_ladder(n_channels: int, energy_spacing: float, nearest_neighbor_dipole: float, n_bound: int) -> ModelSystem:
    """Equally spaced ladder with nearest-neighbour dipole coupling.

    The top ``n_channels - n_bound`` channels are flagged unbound.
    """
    if n_channels < 1 or energy_spacing <= 0:
        raise ValueError("n_channels and energy_spacing must be positive")
    if not 0 <= n_bound <= n_channels:
        raise ValueError("n_bound must lie in [0, n_channels]")
    energies = energy_spacing * np.arange(n_channels)
    mu = np.zeros((n_channels, n_channels))
    idx = np.arange(n_channels - 1)
    mu[idx, idx + 1] = mu[idx + 1, idx] = nearest_neighbor_dipole
    flags = np.arange(n_channels) < n_bound
    return ModelSystem(ChannelBasis(energies, flags), mu, label=f"ladder-{n_channels}")


def field_nodes(pulse: PulseSpec, n_steps: int) -> np.ndarray:
    """Step boundaries at field zeros closest to a uniform split of [0, T0].

    Each interior boundary is a sign change of the field within half a carrier
    period of the uniform split point, refined by bracketing to 1e-10.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    T0 = pulse.duration
    if n_steps == 1:
        return np.array([0.0, T0])
    if pulse.carrier_frequency <= 0:
        raise ValueError("field nodes need a positive carrier frequency")
    half_period = np.pi / pulse.carrier_frequency
    bounds = [0.0]
    for b in np.linspace(0.0, T0, n_steps + 1)[1:-1]:
        lo, hi = max(b - half_period, 0.0), min(b + half_period, T0)
        ts = np.linspace(lo, hi, 257)
        f = field_amplitude(pulse, ts)
        roots = []
        for a, c, fa, fc in zip(ts[:-1], ts[1:], f[:-1], f[1:]):
            if fa == 0.0:
                roots.append(a)
            elif fa * fc < 0:
                roots.append(brentq(lambda x: field_amplitude(pulse, x), a, c, xtol=1e-12))
        roots = [r for r in roots if bounds[-1] < r < T0]
        if not roots:
            raise ValueError(f"no field zero near t = {b:.6g}; too many steps for this pulse")
        bounds.append(min(roots, key=lambda r: abs(r - b)))
    bounds.append(T0)
    out = np.array(bounds)
    if np.any(np.diff(out) <= 0):
        raise ValueError("field nodes are not strictly increasing; reduce n_steps")
    return out

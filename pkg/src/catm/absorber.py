"""Time-dependent absorbing potential on the artificial interval (T0, T].

Three block forms are provided for each grid time t_i:

* diagonal: v(t_i) on every channel except the anchor l;
* first: the diagonal form written in the non-orthogonal basis built on the
  target state, which adds a column -v(t_i) psi_j / psi_l;
* corrected: the first form with the column entries shifted by E_j - E_l, so
  that (H0 + V) maps the target onto E_l times itself.

Energies are in atomic units and hbar = 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .hilbert import TimeGrid

ANCHOR_THRESHOLD = 1e-10
HALF_COSINE_FRACTION = 0.05
WINDOW_RAMP_FRACTION = 0.5
WINDOW_TAIL_FRACTION = 0.23


class PotentialForm(enum.Enum):
    DIAGONAL = "diagonal"
    FIRST = "first"
    CORRECTED = "corrected"


class AbsorberShape(enum.Enum):
    CONSTANT = "constant"
    SMOOTH_RAMP = "smooth_ramp"
    WINDOW = "window"


class Gate(enum.Enum):
    HEAVISIDE = "heaviside"
    HALF_COSINE = "half_cosine"


@dataclass(frozen=True)
class TargetState:
    """State to be reproduced at the step boundary.

    Attributes:
        psi0: normalized channel vector.
        anchor: channel l with the largest |psi0_l|.
    """

    psi0: np.ndarray
    anchor: int

    def __post_init__(self):
        psi = np.asarray(self.psi0, dtype=complex).copy()
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValueError("target state must be normalized")
        l = int(self.anchor)
        if abs(psi[l]) < ANCHOR_THRESHOLD:
            raise ValueError(f"anchor amplitude {abs(psi[l]):.3e} below {ANCHOR_THRESHOLD}")
        if np.any(np.abs(psi) > abs(psi[l]) * (1 + 1e-12)):
            raise ValueError("anchor must carry the largest amplitude")
        psi.setflags(write=False)
        object.__setattr__(self, "psi0", psi)
        object.__setattr__(self, "anchor", l)

    @classmethod
    def from_vector(cls, psi) -> "TargetState":
        """Normalize ``psi`` and pick its anchor channel."""
        psi = np.asarray(psi, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValueError("target state must be nonzero")
        psi = psi / norm
        return cls(psi, select_anchor_channel(psi))

    @property
    def ratios(self) -> np.ndarray:
        """psi_j / psi_l."""
        return self.psi0 / self.psi0[self.anchor]


@dataclass(frozen=True)
class AbsorberSpec:
    """Shape and size of V(t) = -i V0 profile(t) on (T0, T].

    Attributes:
        shape: profile family.
        V0: magnitude; None means size it from ``target_decay``.
        target_decay: epsilon, the required decay of unwanted components.
        ramp_fraction: rise time of SMOOTH_RAMP (fraction of dT) or of each
            WINDOW edge (fraction of the window width).
        tail_fraction: WINDOW only; part of dT left at each end with zero
            absorption.
    """

    shape: AbsorberShape = AbsorberShape.CONSTANT
    V0: float | None = None
    target_decay: float = 1e-12
    ramp_fraction: float = 0.1
    tail_fraction: float = 0.0

    def __post_init__(self):
        if self.V0 is not None and self.V0 < 0:
            raise ValueError("V0 must be non-negative")
        if not 0 < self.target_decay <= 1:
            raise ValueError("target_decay must lie in (0, 1]")
        if not 0 < self.ramp_fraction <= 0.5 and self.shape is not AbsorberShape.CONSTANT:
            raise ValueError("ramp_fraction must lie in (0, 0.5]")
        if not 0 <= self.tail_fraction < 0.5:
            raise ValueError("tail_fraction must lie in [0, 0.5)")


def window_absorber(target_decay: float = 1e-12) -> AbsorberSpec:
    """Default WINDOW absorber used for multi-step propagation."""
    return AbsorberSpec(AbsorberShape.WINDOW, target_decay=target_decay, ramp_fraction=WINDOW_RAMP_FRACTION,
                        tail_fraction=WINDOW_TAIL_FRACTION)


def select_anchor_channel(psi0) -> int:
    """Index of the largest |psi0_j|, lowest index on ties."""
    a = np.abs(np.asarray(psi0, dtype=complex))
    if a.size == 0 or not np.any(a > 0):
        raise ValueError("state vector is zero")
    return int(np.argmax(a))


def _check_anchor(psi0, l):
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(psi0[l]) < ANCHOR_THRESHOLD:
        raise ValueError(f"ill-conditioned anchor: |psi0_l| = {abs(psi0[l]):.3e}")
    return psi0


def basis_matrix(psi0, l: int) -> np.ndarray:
    """Identity with column l replaced by psi0."""
    psi0 = _check_anchor(psi0, l)
    B = np.eye(psi0.size, dtype=complex)
    B[:, l] = psi0
    return B


def inverse_basis_matrix(psi0, l: int) -> np.ndarray:
    """Closed-form inverse of :func:`basis_matrix`."""
    psi0 = _check_anchor(psi0, l)
    Binv = np.eye(psi0.size, dtype=complex)
    Binv[:, l] = -psi0 / psi0[l]
    Binv[l, l] = 1.0 / psi0[l]
    return Binv


# ---------------------------------------------------------------- profiles

def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        f1 = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return f0 / (f0 + f1)


def window_support(spec: AbsorberSpec, grid: TimeGrid) -> tuple[float, float]:
    """Times (T_s, T_a) between which the profile may be nonzero."""
    tail = spec.tail_fraction * grid.dT if spec.shape is AbsorberShape.WINDOW else 0.0
    return grid.T0 + tail, grid.T - tail


def profile(spec: AbsorberSpec, grid: TimeGrid, t, gate: Gate = Gate.HEAVISIDE):
    """Dimensionless profile in [0, 1]; exactly zero for t <= T0."""
    t = np.asarray(t, dtype=float)
    s = (t - grid.T0) / grid.dT
    active = (s > 0) & (s <= 1)
    sc = np.clip(s, 0.0, 1.0)
    if spec.shape is AbsorberShape.CONSTANT:
        p = np.ones_like(sc)
    elif spec.shape is AbsorberShape.SMOOTH_RAMP:
        r = spec.ramp_fraction
        p = np.sin(0.5 * np.pi * np.minimum(sc / r, 1.0)) ** 2
    else:
        tail = spec.tail_fraction
        x = (sc - tail) / (1.0 - 2.0 * tail)
        r = spec.ramp_fraction
        p = np.where((x > 0) & (x < 1), smoothstep(x / r) * smoothstep((1 - x) / r), 0.0)
    if gate is Gate.HALF_COSINE:
        f = HALF_COSINE_FRACTION
        p = p * np.where(sc < f, 0.5 - 0.5 * np.cos(np.pi * sc / f), 1.0)
    out = np.where(active, p, 0.0)
    return float(out) if out.ndim == 0 else out


def cumulative_profile(spec: AbsorberSpec, grid: TimeGrid, t, gate: Gate = Gate.HEAVISIDE):
    """Integral of the profile from T0 to t (t in [T0, T])."""
    t = np.asarray(t, dtype=float)
    tau = np.clip(t, grid.T0, grid.T) - grid.T0
    if spec.shape is AbsorberShape.CONSTANT and gate is Gate.HEAVISIDE:
        return tau
    if spec.shape is AbsorberShape.SMOOTH_RAMP and gate is Gate.HEAVISIDE:
        tr = spec.ramp_fraction * grid.dT
        a = np.minimum(tau, tr)
        ramp = 0.5 * a - tr / (2 * np.pi) * np.sin(np.pi * a / tr)
        return ramp + np.maximum(tau - tr, 0.0)
    breaks = _profile_breaks(spec, grid, gate)
    f = lambda x: profile(spec, grid, x, gate)  # noqa: E731

    def one(b):
        pts = [p for p in breaks if grid.T0 < p < b]
        return quad(f, grid.T0, b, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=400)[0]

    out = np.vectorize(one, otypes=[float])(grid.T0 + tau)
    return float(out) if out.ndim == 0 else out


def _profile_breaks(spec, grid, gate):
    pts = []
    if spec.shape is AbsorberShape.SMOOTH_RAMP:
        pts.append(grid.T0 + spec.ramp_fraction * grid.dT)
    if spec.shape is AbsorberShape.WINDOW:
        Ts, Ta = window_support(spec, grid)
        w = Ta - Ts
        pts += [Ts, Ts + spec.ramp_fraction * w, Ta - spec.ramp_fraction * w, Ta]
    if gate is Gate.HALF_COSINE:
        pts.append(grid.T0 + HALF_COSINE_FRACTION * grid.dT)
    return sorted(pts)


def profile_integral(spec: AbsorberSpec, grid: TimeGrid, gate: Gate = Gate.HEAVISIDE) -> float:
    return float(cumulative_profile(spec, grid, grid.T, gate))


def required_amplitude(epsilon: float, dT: float, energies=None, profile_fraction: float = 1.0) -> float:
    """Smallest V0 with max_j decay_factor <= epsilon for real energies.

    Arguments:
        epsilon: target decay in (0, 1].
        dT: artificial duration.
        energies: channel energies (only checked to be real and finite).
        profile_fraction: profile integral divided by dT (1 for a constant profile).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if dT <= 0 or profile_fraction <= 0:
        raise ValueError("dT and profile_fraction must be positive")
    if energies is not None and not np.all(np.isfinite(np.asarray(energies, dtype=float))):
        raise ValueError("energies must be real and finite")
    return float(np.log(1.0 / epsilon) / (dT * profile_fraction))


def sized(spec: AbsorberSpec, grid: TimeGrid, gate: Gate = Gate.HEAVISIDE) -> AbsorberSpec:
    """Return ``spec`` with V0 filled in from its target decay if unset."""
    if spec.V0 is not None:
        return spec
    frac = profile_integral(spec, grid, gate) / grid.dT
    return replace(spec, V0=required_amplitude(spec.target_decay, grid.dT, profile_fraction=frac))


def vopt(spec: AbsorberSpec, grid: TimeGrid, t, gate: Gate = Gate.HEAVISIDE):
    """-i V0 profile(t); zero on [0, T0]."""
    spec = sized(spec, grid, gate)
    return -1j * spec.V0 * np.asarray(profile(spec, grid, t, gate))


def decay_factor(spec: AbsorberSpec, grid: TimeGrid, energies, l: int, j: int, E_lambda=0.0,
                 gate: Gate = Gate.HEAVISIDE) -> float:
    """|exp(i int_{T0}^{T} (E_l - E_j - V(t)) dt)|."""
    if j == l:
        raise ValueError("decay factor is defined for j != l")
    spec = sized(spec, grid, gate)
    energies = np.asarray(energies, dtype=complex)
    phase = 1j * (energies[l] - energies[j]) * grid.dT - 1j * (-1j * spec.V0) * profile_integral(spec, grid, gate)
    return float(abs(np.exp(phase)))


# ---------------------------------------------------------------- blocks

def correction_weight(spec: AbsorberSpec, grid: TimeGrid, t, gate: Gate = Gate.HEAVISIDE):
    """Factor multiplying the E_j - E_l column terms of the corrected form.

    It is the gate itself (1 on (T0, T] for the Heaviside gate) except for the
    WINDOW shape, where the whole block follows the window profile.
    """
    t = np.asarray(t, dtype=float)
    if spec.shape is AbsorberShape.WINDOW:
        return profile(spec, grid, t, gate)
    return profile(AbsorberSpec(AbsorberShape.CONSTANT), grid, t, gate)


def block_stack(form: PotentialForm, v, ratios, anchor: int, energies=None, weight=None) -> np.ndarray:
    """Potential blocks for an array of absorber values.

    Arguments:
        form: which block form to build.
        v: (N,) complex absorber values v(t_i).
        ratios: column coefficients r_j (psi_j / psi_l for the plain forms).
        anchor: channel l.
        energies: needed for the corrected form.
        weight: (N,) factor on the E_j - E_l terms; defaults to 1 where v != 0.

    Returns:
        (N, n, n) complex array.
    """
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    r = np.asarray(ratios, dtype=complex)
    n = r.size
    l = anchor
    diag = np.ones(n)
    diag[l] = 0.0
    out = np.zeros((v.size, n, n), complex)
    idx = np.arange(n)
    out[:, idx, idx] = v[:, None] * diag
    if form is PotentialForm.DIAGONAL:
        return out
    col = -r.copy()
    col[l] = 0.0
    out[:, :, l] += v[:, None] * col
    if form is PotentialForm.CORRECTED:
        if energies is None:
            raise ValueError("the corrected form needs channel energies")
        dE = np.asarray(energies, dtype=float) - energies[l]
        w = (np.abs(v) > 0).astype(float) if weight is None else np.atleast_1d(np.asarray(weight, dtype=float))
        out[:, :, l] += w[:, None] * (col * dE)
    return out


def potential_block_diagonal(spec: AbsorberSpec, grid: TimeGrid, t_i: float, l: int, n_channels: int,
                             gate: Gate = Gate.HEAVISIDE) -> np.ndarray:
    ratios = np.zeros(n_channels, complex)
    ratios[l] = 1.0
    return block_stack(PotentialForm.DIAGONAL, vopt(spec, grid, t_i, gate), ratios, l)[0]


def potential_block_first(spec: AbsorberSpec, grid: TimeGrid, t_i: float, target: TargetState,
                          gate: Gate = Gate.HEAVISIDE) -> np.ndarray:
    return block_stack(PotentialForm.FIRST, vopt(spec, grid, t_i, gate), target.ratios, target.anchor)[0]


def potential_block_corrected(spec: AbsorberSpec, grid: TimeGrid, t_i: float, target: TargetState, energies,
                              gate: Gate = Gate.HEAVISIDE) -> np.ndarray:
    """Corrected block; the E_j - E_l terms share the gate of v(t_i)."""
    return block_stack(PotentialForm.CORRECTED, vopt(spec, grid, t_i, gate), target.ratios,
                       target.anchor, energies, correction_weight(spec, grid, t_i, gate))[0]


# ---------------------------------------------------------------- interval solutions

def _exponents(spec, grid, energies, E_lambda, t, gate):
    """P_j(t) = int_{T0}^t (E_lambda - E_j - V) for all j, shape (n, len(t))."""
    tau = np.atleast_1d(t) - grid.T0
    G = np.atleast_1d(cumulative_profile(spec, grid, np.atleast_1d(t), gate))
    energies = np.asarray(energies, dtype=complex)
    return (E_lambda - energies)[:, None] * tau[None, :] + 1j * spec.V0 * G[None, :]


def _check_interval(grid, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < grid.T0 - 1e-12) or np.any(t > grid.T + 1e-12):
        raise ValueError("t must lie in [T0, T]")
    return t


def analytic_interval_solution_corrected(lambda_T0, spec: AbsorberSpec, grid: TimeGrid, energies, l: int,
                                         target: TargetState, E_lambda: complex, t,
                                         gate: Gate = Gate.HEAVISIDE) -> np.ndarray:
    """Closed-form solution of the corrected interval equation with zero coupling.

    The closed form is exact when the E_j - E_l terms act on all of (T0, T],
    i.e. for CONSTANT and SMOOTH_RAMP profiles behind a Heaviside gate.

    Returns an (n,) vector for scalar ``t`` and (n, len(t)) otherwise.
    """
    if spec.shape is AbsorberShape.WINDOW or gate is not Gate.HEAVISIDE:
        raise ValueError("closed form requires a Heaviside-gated CONSTANT or SMOOTH_RAMP profile")
    scalar = np.ndim(t) == 0
    t = _check_interval(grid, t)
    spec = sized(spec, grid, gate)
    lam0 = np.asarray(lambda_T0, dtype=complex)
    energies = np.asarray(energies, dtype=float)
    r = target.psi0 / target.psi0[l]
    Pj = np.exp(1j * _exponents(spec, grid, energies, E_lambda, t, gate))
    Pl = np.exp(1j * (E_lambda - energies[l]) * (t - grid.T0))[None, :]
    out = lam0[:, None] * Pj + lam0[l] * r[:, None] * (Pl - Pj)
    out[l] = lam0[l] * Pl[0]
    return out[:, 0] if scalar else out


def analytic_interval_solution_first(lambda_T0, spec: AbsorberSpec, grid: TimeGrid, energies, l: int,
                                     target: TargetState, E_lambda: complex, t,
                                     gate: Gate = Gate.HEAVISIDE) -> np.ndarray:
    """Solution of the first-form interval equation with zero coupling.

    The inner integral is closed form for a constant Heaviside profile and is
    otherwise evaluated by nested adaptive quadrature.

    Raises:
        RuntimeError: if the quadrature error exceeds 1e-10 relative.
    """
    scalar = np.ndim(t) == 0
    t = _check_interval(grid, t)
    spec = sized(spec, grid, gate)
    lam0 = np.asarray(lambda_T0, dtype=complex)
    energies = np.asarray(energies, dtype=float)
    n = energies.size
    r = target.psi0 / target.psi0[l]
    Pj = np.exp(1j * _exponents(spec, grid, energies, E_lambda, t, gate))
    v0 = -1j * spec.V0
    out = lam0[:, None] * Pj
    for j in range(n):
        if j == l or r[j] == 0:
            continue
        dE = energies[j] - energies[l]
        if spec.shape is AbsorberShape.CONSTANT and gate is Gate.HEAVISIDE:
            a = dE + v0
            tau = t - grid.T0
            if abs(a) * max(grid.dT, 1.0) < 1e-8:
                integral = v0 * tau * (1 + 0.5j * a * tau)
            else:
                integral = v0 * (np.exp(1j * a * tau) - 1) / (1j * a)
        else:
            integral = np.array([_first_integral(spec, grid, dE, b, gate) for b in t])
        out[j] += 1j * r[j] * lam0[l] * integral * Pj[j]
    out[l] = lam0[l] * np.exp(1j * (E_lambda - energies[l]) * (t - grid.T0))
    return out[:, 0] if scalar else out


def _first_integral(spec, grid, dE, b, gate):
    """int_{T0}^{b} v(t') exp(i int_{T0}^{t'} (dE + v)) dt' by nested quadrature."""
    if b <= grid.T0:
        return 0.0j

    def integrand(x):
        v = -1j * spec.V0 * profile(spec, grid, x, gate)
        G = cumulative_profile(spec, grid, x, gate)
        return v * np.exp(1j * dE * (x - grid.T0) + spec.V0 * G * 1j * (-1j))

    pts = [p for p in _profile_breaks(spec, grid, gate) if grid.T0 < p < b] or None
    kw = dict(points=pts, epsabs=1e-13, epsrel=1e-12, limit=400, full_output=1)
    re = quad(lambda x: integrand(x).real, grid.T0, b, **kw)
    im = quad(lambda x: integrand(x).imag, grid.T0, b, **kw)
    value = re[0] + 1j * im[0]
    err = re[1] + im[1]
    if err > 1e-10 * max(1.0, abs(value)):
        raise RuntimeError(f"interval quadrature did not converge (error {err:.2e})")
    return value

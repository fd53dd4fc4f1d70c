"""Single- and multi-step CATM propagation.

Each step maps its physical interval [T_i, T_{i+1}] onto [0, T0] of a grid
with an appended absorbing interval, solves for the constrained Floquet
eigenvector and rebuilds Psi(t) = alpha exp(-i E t) lambda(t).

Two absorbing-interval designs are available.

* Gated (CONSTANT / SMOOTH_RAMP shapes): the field is zero on (T0, T] and the
  absorber blocks are switched on by a Heaviside or half-cosine gate.
* Window (WINDOW shape): the absorber is a C-infinity window separated from
  the physical interval by two tails in which the field is smoothly switched
  off (continuing the pulse past the step end) and back on (the pulse before
  the step start).  The periodic solution then has no derivative jump at the
  seam.  Because the window does not cover the whole artificial interval, the
  column coefficients of the corrected blocks are rescaled by 1 / (1 + kappa_j),
  where kappa_j is the residual forcing accumulated inside the window, and the
  target is pulled back through the entry tail so that the state reached at T
  is the step's initial state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .absorber import (ANCHOR_THRESHOLD, AbsorberShape, AbsorberSpec, Gate, PotentialForm, TargetState,
                       block_stack, profile, sized, smoothstep, window_support)
from .floquet import (ConvergenceError, EigenpairResult, FloquetOperator, build_operator,
                      solve_constrained_eigenpair)
from .hilbert import TimeGrid, band_limited_values, fourier_coefficients
from .models import ModelSystem, PulseSpec, field_amplitude, field_nodes
from .oracle import _integrate

NODE_TOLERANCE = 1e-8
DESIGN_TOL = 1e-13


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-10
    max_iter: int = 30
    dense_limit: int = 1024


@dataclass(frozen=True)
class StepPlan:
    """Partition of the pulse into steps.

    Attributes:
        boundaries: step edges, 0 = T_0 < ... < T_Ns = pulse duration.
        n_points: grid points N per step.
        dt_fraction: requested artificial duration as a fraction of each
            step's physical duration (adjusted so T0 falls on a grid point).
        potential_form: absorber block form.
        gate: switch-on rule for gated shapes.
        force: accept interior boundaries that are not field nodes.
    """

    boundaries: np.ndarray
    n_points: int
    dt_fraction: float = 1.0
    potential_form: PotentialForm = PotentialForm.CORRECTED
    gate: Gate = Gate.HEAVISIDE
    force: bool = False

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly increasing with at least two entries")
        if self.dt_fraction <= 0:
            raise ValueError("dt_fraction must be positive")
        n = int(self.n_points)
        if n < 2 or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 2")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "n_points", n)

    @classmethod
    def from_nodes(cls, pulse: PulseSpec, n_steps: int, n_points: int, **kw) -> "StepPlan":
        return cls(field_nodes(pulse, n_steps), n_points, **kw)

    @property
    def n_steps(self) -> int:
        return self.boundaries.size - 1

    def check(self, pulse: PulseSpec | None) -> None:
        """Raise unless interior boundaries are field nodes (or ``force`` is set)."""
        if self.force or pulse is None:
            return
        for t in self.boundaries[1:-1]:
            if abs(field_amplitude(pulse, t)) >= NODE_TOLERANCE:
                raise ValueError(f"boundary {t:.10g} is not a field node; set force to override")


@dataclass(frozen=True)
class StepResult:
    """Outcome of one CATM step (times are local, t' = t - t_offset).

    Attributes:
        grid: the step grid.
        t_offset: absolute time of local t' = 0.
        psi_start: state the step was seeded with.
        eigen: constrained eigenpair.
        alpha: overlap <lambda(0)|Psi(0)> with ||lambda(0)|| = 1.
        coefficients: Fourier coefficients of lambda with ||lambda(0)|| = 1.
        values: Psi at the grid points.
        boundary_error: || Psi(0)/||Psi(0)|| - psi_start/||psi_start|| ||.
        alpha_closed: proportionality factor lambda(T) = a psi0 predicted from
            the anchor component at the start of absorption.
        design: absorber bookkeeping (anchor, V0, window edges, kappa).
    """

    grid: TimeGrid
    t_offset: float
    psi_start: np.ndarray
    eigen: EigenpairResult
    alpha: complex
    coefficients: np.ndarray
    values: np.ndarray
    boundary_error: float
    alpha_closed: complex | None
    design: dict = field(default_factory=dict)

    @property
    def quasi_energy(self) -> complex:
        return self.eigen.quasi_energy

    @property
    def physical_index(self) -> int:
        return self.grid.physical_index

    @property
    def end_state(self) -> np.ndarray:
        """Psi at the end of the physical interval (the next step's seed)."""
        return self.values[:, self.physical_index]

    def wavefunction(self, t_local) -> np.ndarray:
        """Band-limited Psi at arbitrary local times, shape (n, len(t))."""
        t_local = np.atleast_1d(np.asarray(t_local, dtype=float))
        lam = band_limited_values(self.coefficients, self.grid, t_local)
        return self.alpha * np.exp(-1j * self.quasi_energy * t_local)[None, :] * lam


# ---------------------------------------------------------------- window design

def _window_field(pulse, grid, spec, t_offset):
    """Field on the grid including the switch-off and switch-on tails."""
    t = grid.points
    k = grid.physical_index
    f = np.zeros(grid.n_points)
    if pulse is None:
        return f
    f[:k + 1] = field_amplitude(pulse, t[:k + 1] + t_offset)
    tail = spec.tail_fraction * grid.dT
    if tail > 0:
        art = np.arange(grid.n_points) > k
        f_out = field_amplitude(pulse, t + t_offset) * (1.0 - smoothstep((t - grid.T0) / tail))
        f_in = field_amplitude(pulse, t - grid.T + t_offset) * smoothstep((t - (grid.T - tail)) / tail)
        f[art] = (f_out + f_in)[art]
    return f


def _entry_field(pulse, grid, spec, t_offset):
    tail = spec.tail_fraction * grid.dT

    def f(t):
        if pulse is None or tail == 0:
            return 0.0
        return field_amplitude(pulse, t - grid.T + t_offset) * float(smoothstep((t - (grid.T - tail)) / tail))

    return f


def window_design(model: ModelSystem, pulse: PulseSpec | None, grid: TimeGrid, spec: AbsorberSpec,
                  psi_hat: np.ndarray, t_offset: float) -> dict:
    """Anchor, target pull-back and kappa compensation for the window absorber.

    Returns:
        dict with keys anchor, phi (target at the end of absorption), ratios
        (compensated column coefficients), kappa, V0, T_s, T_a.
    """
    spec = sized(spec, grid)
    T_s, T_a = window_support(spec, grid)
    E = model.energies
    mu = model.dipole
    f_in = _entry_field(pulse, grid, spec, t_offset)
    if T_a < grid.T:
        back = _integrate(lambda t, y: -1j * (E * y - f_in(t) * (mu @ y)), (grid.T, T_a), psi_hat,
                          DESIGN_TOL, DESIGN_TOL * 1e-3)
        phi = back.states[:, -1]
    else:
        phi = psi_hat.copy()
    l = int(np.argmax(np.abs(phi)))
    if abs(phi[l]) < ANCHOR_THRESHOLD:
        raise ValueError("ill-conditioned anchor in window design")
    r = phi / phi[l]
    dE = E - E[l]
    v0 = -1j * spec.V0

    def rhs(t, w):
        g = profile(spec, grid, t)
        return -1j * ((dE + g * v0) * w + dE * (1.0 - g))

    kappa = _integrate(rhs, (T_s, T_a), np.zeros(E.size, complex), DESIGN_TOL, DESIGN_TOL * 1e-3).states[:, -1]
    kappa[l] = 0.0
    return dict(anchor=l, phi=phi, ratios=r / (1.0 + kappa), kappa=kappa, V0=spec.V0, T_s=T_s, T_a=T_a,
                spec=spec)


# ---------------------------------------------------------------- steps

def catm_single_step(model: ModelSystem, pulse: PulseSpec | None, psi_start, grid: TimeGrid,
                     absorber_spec: AbsorberSpec, solver_params: SolverParams = SolverParams(),
                     potential_form: PotentialForm = PotentialForm.CORRECTED, gate: Gate = Gate.HEAVISIDE,
                     t_offset: float = 0.0) -> StepResult:
    """One CATM step on local time [0, T] with the pulse shifted by ``t_offset``.

    Arguments:
        model: channel energies and dipole.
        pulse: laser pulse (None for field-free).
        psi_start: initial state, norm <= 1.
        grid: step grid; T0 is the physical duration of the step.
        absorber_spec: absorber shape and decay target.
        solver_params: eigensolver settings.
        potential_form: absorber block form.
        gate: switch-on rule (gated shapes only).
        t_offset: absolute time of the step start.
    """
    psi_start = np.asarray(psi_start, dtype=complex)
    norm = np.linalg.norm(psi_start)
    if norm == 0 or norm > 1 + 1e-6:
        raise ValueError("psi_start must have norm in (0, 1]")
    psi_hat = psi_start / norm
    target = TargetState.from_vector(psi_hat)
    if absorber_spec.shape is AbsorberShape.WINDOW:
        d = window_design(model, pulse, grid, absorber_spec, psi_hat, t_offset)
        spec = d["spec"]
        g = profile(spec, grid, grid.points)
        ratios = d["ratios"] if potential_form is PotentialForm.CORRECTED else d["phi"] / d["phi"][d["anchor"]]
        pot = block_stack(potential_form, -1j * spec.V0 * g, ratios, d["anchor"], model.energies, g)
        op = FloquetOperator(model, grid, _window_field(pulse, grid, spec, t_offset), pot, potential_form,
                             spec.V0)
        anchor, phi, T_s, T_a = d["anchor"], d["phi"], d["T_s"], d["T_a"]
        design = {k: d[k] for k in ("anchor", "V0", "T_s", "T_a", "kappa")}
    else:
        spec = sized(absorber_spec, grid, gate)
        op = build_operator(model, pulse, grid, spec, target, potential_form, gate, t_offset)
        anchor, phi, T_s, T_a = target.anchor, psi_hat, grid.T0, grid.T
        design = dict(anchor=anchor, V0=spec.V0, T_s=T_s, T_a=T_a)
    eig = solve_constrained_eigenpair(op, TargetState(psi_hat, target.anchor), solver_params.tol,
                                      solver_params.max_iter, solver_params.dense_limit,
                                      shift=model.energies[anchor])
    X = eig.eigenvector.amplitudes
    lam = X / np.linalg.norm(X[:, 0])
    alpha = complex(np.vdot(lam[:, 0], psi_start))
    E_lam = eig.quasi_energy
    values = alpha * np.exp(-1j * E_lam * grid.points)[None, :] * lam
    psi0_rec = values[:, 0]
    boundary_error = float(np.linalg.norm(psi0_rec / np.linalg.norm(psi0_rec) - psi_hat))
    coeffs = fourier_coefficients(lam)
    alpha_closed = None
    if potential_form is PotentialForm.CORRECTED:
        lam_l = band_limited_values(coeffs[anchor], grid, [T_s])[0]
        E_l = model.energies[anchor]
        alpha_closed = complex(lam_l / phi[anchor] * np.exp(1j * (E_lam - E_l) * (T_a - T_s))
                               * np.exp(1j * E_lam * (grid.T - T_a)))
    return StepResult(grid, float(t_offset), psi_start, eig, alpha, coeffs, values, boundary_error,
                      alpha_closed, design)


@dataclass(frozen=True)
class AlphaReport:
    alpha_overlap: complex
    alpha_closed_form: complex
    deviation: float


def verify_alpha(step: StepResult) -> AlphaReport:
    """Compare the overlap alpha with the closed-form proportionality factor.

    With lambda(T) = a psi0 / ||psi0|| and ||lambda(0)|| = 1, the overlap is
    expected to equal ||psi_start|| / a.
    """
    if step.alpha_closed is None:
        raise ValueError("closed-form alpha needs the corrected potential form")
    implied = np.linalg.norm(step.psi_start) / step.alpha_closed
    dev = abs(step.alpha - implied) / abs(step.alpha)
    return AlphaReport(step.alpha, complex(implied), float(dev))


@dataclass(frozen=True)
class StepDiagnostics:
    alpha: complex
    quasi_energy: complex
    residual_norm: float
    boundary_error: float
    seam_jump: float
    iterations: int
    wrong_state: bool
    alpha_deviation: float | None


@dataclass(frozen=True)
class PropagationResult:
    """Multi-step propagation output.

    Attributes:
        model: the propagated model.
        steps: per-step results, in order.
        per_step: per-step diagnostics.
        times: all sample times (absolute); artificial samples included.
        states: Psi at ``times``.
        is_artificial: True for samples on an absorbing interval.
    """

    model: ModelSystem
    steps: tuple
    per_step: tuple
    times: np.ndarray
    states: np.ndarray
    is_artificial: np.ndarray

    @property
    def physical_times(self) -> np.ndarray:
        return self.times[~self.is_artificial]

    @property
    def populations(self) -> np.ndarray:
        """(n, n_samples) populations |<v|Psi>|^2 at all samples."""
        return np.abs(self.states) ** 2

    @property
    def physical_populations(self) -> np.ndarray:
        return self.populations[:, ~self.is_artificial]

    @property
    def p_diss(self) -> np.ndarray:
        bound = self.model.basis.bound_flags
        return 1.0 - self.populations[bound].sum(axis=0)

    def wavefunction_at(self, times) -> np.ndarray:
        """Band-limited Psi at absolute physical times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        edges = np.array([s.t_offset for s in self.steps] + [self.steps[-1].t_offset + self.steps[-1].grid.T0])
        idx = np.clip(np.searchsorted(edges, times, side="right") - 1, 0, len(self.steps) - 1)
        out = np.empty((self.model.n_channels, times.size), complex)
        for i, step in enumerate(self.steps):
            sel = idx == i
            if np.any(sel):
                out[:, sel] = step.wavefunction(times[sel] - step.t_offset)
        return out


class PropagationError(RuntimeError):
    """A step failed; ``partial`` holds the completed steps."""

    def __init__(self, message: str, partial: PropagationResult | None):
        super().__init__(message)
        self.partial = partial


def _assemble(model, steps, diags) -> PropagationResult:
    times, states, flags = [], [], []
    for i, s in enumerate(steps):
        k = s.physical_index
        last = i == len(steps) - 1
        phys = np.arange(k + 1 if last else k)
        art = np.arange(k + 1, s.grid.n_points)
        t = s.grid.points + s.t_offset
        times += [t[phys], t[art]]
        states += [s.values[:, phys], s.values[:, art]]
        flags += [np.zeros(phys.size, bool), np.ones(art.size, bool)]
    return PropagationResult(model, tuple(steps), tuple(diags), np.concatenate(times),
                             np.concatenate(states, axis=1), np.concatenate(flags))


def catm_multi_step(model: ModelSystem, pulse: PulseSpec | None, psi0, plan: StepPlan,
                    absorber_spec: AbsorberSpec, solver_params: SolverParams = SolverParams()) -> PropagationResult:
    """Chain CATM steps; the state at the end of each physical interval seeds the next.

    Raises:
        PropagationError: when a step fails, with the completed steps attached.
    """
    plan.check(pulse)
    psi = np.asarray(psi0, dtype=complex)
    steps, diags = [], []
    for i in range(plan.n_steps):
        a, b = plan.boundaries[i], plan.boundaries[i + 1]
        grid = TimeGrid.aligned(b - a, plan.n_points, plan.dt_fraction)
        try:
            s = catm_single_step(model, pulse, psi, grid, absorber_spec, solver_params, plan.potential_form,
                                 plan.gate, t_offset=a)
        except (ConvergenceError, ValueError, ArithmeticError) as exc:
            partial = _assemble(model, steps, diags) if steps else None
            raise PropagationError(f"step {i} failed: {exc}", partial) from exc
        dev = verify_alpha(s).deviation if s.alpha_closed is not None else None
        diags.append(StepDiagnostics(s.alpha, s.quasi_energy, s.eigen.residual_norm, s.boundary_error,
                                     float(np.linalg.norm(psi - s.values[:, 0])), s.eigen.iterations,
                                     s.eigen.wrong_state, dev))
        steps.append(s)
        psi = s.end_state
    return _assemble(model, steps, diags)


@dataclass(frozen=True)
class PopulationTable:
    times: np.ndarray
    populations: np.ndarray
    bound: np.ndarray
    p_diss: np.ndarray


def populations_series(result: PropagationResult) -> PopulationTable:
    """Populations of the bound channels and p_diss at the physical times."""
    bound = result.model.basis.bound_flags
    mask = ~result.is_artificial
    return PopulationTable(result.times[mask], result.populations[:, mask][bound], np.flatnonzero(bound),
                           result.p_diss[mask])


def dissociation_series(result: PropagationResult) -> tuple[np.ndarray, np.ndarray]:
    mask = ~result.is_artificial
    return result.times[mask], result.p_diss[mask]


def with_epsilon(spec: AbsorberSpec, epsilon: float) -> AbsorberSpec:
    """Copy of ``spec`` re-sized for a different decay target."""
    return replace(spec, V0=None, target_decay=epsilon)

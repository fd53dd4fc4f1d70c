"""Direct ODE integrators used as independent references.

Both integrators step scipy's DOP853 (explicit Runge-Kutta of order 8 with
embedded error control) and record every accepted step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853

from .absorber import (AbsorberSpec, Gate, PotentialForm, TargetState, block_stack, correction_weight, sized,
                       vopt)
from .hilbert import TimeGrid
from .models import ModelSystem, PulseSpec, field_amplitude


class IntervalForm(enum.Enum):
    FIRST = "first"
    CORRECTED = "corrected"


class StiffnessError(RuntimeError):
    """Step size underflow in the adaptive integrator."""


@dataclass(frozen=True)
class OdeSolution:
    """Sampled solution of a linear ODE.

    Attributes:
        times: sample times.
        states: (n, len(times)) complex states.
        accepted_step_sizes: sizes of all accepted steps.
        error_estimate: local error estimate of each accepted step, in units
            where the requested tolerance is the acceptance limit.
    """

    times: np.ndarray
    states: np.ndarray
    accepted_step_sizes: np.ndarray
    error_estimate: np.ndarray


def _integrate(fun, t_span, y0, rtol, atol, t_eval=None) -> OdeSolution:
    t0, t1 = map(float, t_span)
    y0 = np.asarray(y0, dtype=complex)
    if t_eval is None:
        t_eval = np.array([t0, t1])
    t_eval = np.asarray(t_eval, dtype=float)
    forward = t1 >= t0
    order = np.argsort(t_eval if forward else -t_eval, kind="stable")
    states = np.empty((y0.size, t_eval.size), complex)
    if t0 == t1:
        states[:] = y0[:, None]
        return OdeSolution(t_eval, states, np.zeros(0), np.zeros(0))
    solver = DOP853(fun, t0, y0, t1, rtol=rtol, atol=atol)
    sizes, errors = [], []
    pos = 0
    while pos < order.size and t_eval[order[pos]] == t0:
        states[:, order[pos]] = y0
        pos += 1
    while solver.status == "running":
        y_old = solver.y.copy()
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessError(f"integration failed at t = {solver.t:.6g}: {msg}")
        h = solver.t - solver.t_old
        sizes.append(abs(h))
        scale = atol + np.maximum(np.abs(y_old), np.abs(solver.y)) * rtol
        errors.append(float(solver._estimate_error_norm(solver.K, h, scale)) * rtol)
        dense = None
        while pos < order.size:
            te = t_eval[order[pos]]
            if (forward and te > solver.t) or (not forward and te < solver.t):
                break
            if dense is None:
                dense = solver.dense_output()
            states[:, order[pos]] = solver.y if te == solver.t else dense(te)
            pos += 1
    return OdeSolution(t_eval, states, np.array(sizes), np.array(errors))


def integrate_tdse(model: ModelSystem, pulse: PulseSpec | None, psi0, t_span, tol: float = 1e-12,
                   t_eval=None) -> OdeSolution:
    """Solve i dPsi/dt = (H0 - E(t) mu) Psi.

    Arguments:
        model: channel energies and dipole.
        pulse: laser pulse; None for field-free evolution.
        psi0: initial state.
        t_span: (start, end); backward integration is allowed.
        tol: relative tolerance in (1e-14, 1e-3); the absolute tolerance is
            a thousand times smaller.
        t_eval: sample times within ``t_span``.
    """
    if not 1e-14 < tol < 1e-3:
        raise ValueError("tol must lie in (1e-14, 1e-3)")
    E = model.energies.astype(complex)
    mu = model.dipole

    def rhs(t, y):
        f = field_amplitude(pulse, t) if pulse is not None else 0.0
        return -1j * (E * y - f * (mu @ y))

    return _integrate(rhs, t_span, psi0, tol, tol * 1e-3, t_eval)


def integrate_interval_ode(form: IntervalForm, lambda_T0, spec: AbsorberSpec, grid: TimeGrid, energies,
                           l: int, target: TargetState, E_lambda: complex, tol: float = 1e-12, t_eval=None,
                           gate: Gate = Gate.HEAVISIDE) -> OdeSolution:
    """Integrate i dlambda/dt = (H0 + V(t) - E_lambda) lambda on [T0, T] with no coupling.

    The potential is evaluated from the right at T0, so that a Heaviside gate
    acts on the whole open interval (T0, T].
    """
    spec = sized(spec, grid, gate)
    energies = np.asarray(energies, dtype=float)
    pform = PotentialForm.CORRECTED if form is IntervalForm.CORRECTED else PotentialForm.FIRST
    ratios = target.psi0 / target.psi0[l]
    t_right = np.nextafter(grid.T0, np.inf)

    def rhs(t, y):
        tt = max(t, t_right)
        V = block_stack(pform, vopt(spec, grid, tt, gate), ratios, l, energies,
                        correction_weight(spec, grid, tt, gate))[0]
        return -1j * ((energies - E_lambda) * y + V @ y)

    if t_eval is None:
        t_eval = np.array([grid.T0, grid.T])
    return _integrate(rhs, (grid.T0, grid.T), lambda_T0, tol, tol * 1e-3, t_eval)

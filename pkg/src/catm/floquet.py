"""Floquet operator H0 + W(t) - i d/dt + V(t) and its constrained eigenpair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, gmres

from . import kernels
from .absorber import (AbsorberSpec, Gate, PotentialForm, TargetState, block_stack, correction_weight, sized,
                       vopt)
from .hilbert import (ExtendedVector, Representation, TimeGrid, fourier_coefficients, grid_values,
                      time_derivative_values)
from .models import ModelSystem, PulseSpec, field_amplitude

DENSE_GUARD = 4096
WRONG_STATE_THRESHOLD = 0.1


class ConvergenceError(RuntimeError):
    """Eigensolver stopped without meeting its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class FloquetOperator:
    """Floquet operator sampled on a time grid.

    Attributes:
        model: channel energies and dipole.
        grid: periodic time grid.
        field: (N,) field values at the grid points.
        potential: (N, n, n) absorbing-potential blocks.
        potential_form: which block form ``potential`` holds.
        V0: absorber magnitude, used in the operator norm estimate.
    """

    model: ModelSystem
    grid: TimeGrid
    field: np.ndarray
    potential: np.ndarray
    potential_form: PotentialForm = PotentialForm.CORRECTED
    V0: float = 0.0

    def __post_init__(self):
        n, N = self.model.n_channels, self.grid.n_points
        field = np.asarray(self.field, dtype=float)
        pot = np.asarray(self.potential, dtype=complex)
        if field.shape != (N,) or pot.shape != (N, n, n):
            raise ValueError("field/potential do not match the model and grid")
        blocks = np.diag(self.model.energies).astype(complex)[None] - field[:, None, None] * self.model.dipole[None]
        blocks = np.ascontiguousarray(blocks + pot)
        blocks.setflags(write=False)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "potential", pot)
        object.__setattr__(self, "blocks", blocks)

    @property
    def shape(self) -> tuple[int, int]:
        return self.model.n_channels, self.grid.n_points

    @property
    def norm_estimate(self) -> float:
        """max|E_j| + (N/2) w + V0."""
        return float(np.max(np.abs(self.model.energies)) + 0.5 * self.grid.n_points * self.grid.omega + self.V0)


def build_operator(model: ModelSystem, pulse: PulseSpec | None, grid: TimeGrid, absorber: AbsorberSpec,
                   target: TargetState, potential_form: PotentialForm = PotentialForm.CORRECTED,
                   gate: Gate = Gate.HEAVISIDE, t_offset: float = 0.0) -> FloquetOperator:
    """Operator with the pulse on [0, T0] (shifted by ``t_offset``) and zero field after T0."""
    t = grid.points
    field = np.zeros(grid.n_points)
    if pulse is not None:
        phys = grid.physical_mask
        field[phys] = field_amplitude(pulse, t[phys] + t_offset)
    spec = sized(absorber, grid, gate)
    v = vopt(spec, grid, t, gate)
    pot = block_stack(potential_form, v, target.ratios, target.anchor, model.energies,
                      correction_weight(spec, grid, t, gate))
    return FloquetOperator(model, grid, field, pot, potential_form, spec.V0)


def _as_values(op: FloquetOperator, x):
    if isinstance(x, ExtendedVector):
        a = x.amplitudes
        if x.representation is Representation.FOURIER:
            a = grid_values(a)
        return a, x.representation
    a = np.asarray(x, dtype=complex)
    return a.reshape(op.shape), None


def apply(op: FloquetOperator, x):
    """H_F x; accepts an ExtendedVector (either representation) or an array.

    Arrays may be (n, N) or flat of length n*N and come back in the same shape.
    """
    values, rep = _as_values(op, x)
    y = time_derivative_values(values, op.grid) + kernels.block_apply(op.blocks, np.ascontiguousarray(values))
    if rep is None:
        return y.reshape(np.shape(x))
    if rep is Representation.FOURIER:
        y = fourier_coefficients(y)
    return ExtendedVector(y, rep, op.grid)


def dense_assemble(op: FloquetOperator) -> np.ndarray:
    """Explicit matrix in the time-grid basis, index j*N + i for channel j, time i."""
    n, N = op.shape
    if n * N > DENSE_GUARD:
        raise ValueError(f"dense assembly limited to n_channels*N <= {DENSE_GUARD}")
    D = time_derivative_values(np.eye(N, dtype=complex), op.grid).T
    M = np.kron(np.eye(n), D)
    idx = np.arange(N)
    for j in range(n):
        for k in range(n):
            M[j * N + idx, k * N + idx] += op.blocks[:, j, k]
    return M


class CrankNicolsonPreconditioner:
    """Approximate inverse of (H_F - sigma) from a periodic Crank-Nicolson solve.

    The right-hand side is interpolated to a grid ``refine`` times finer, the
    periodic CN recurrence is closed through its transfer matrix and the
    result is restricted back by Fourier truncation.
    """

    def __init__(self, op: FloquetOperator, sigma: complex, refine: int = 4):
        n, N = op.shape
        self.n, self.N, self.m = n, N, refine
        Nf = N * refine
        h = op.grid.T / Nf
        eye = np.eye(n)
        idx = ((np.arange(Nf) + refine // 2) // refine) % N
        G = op.blocks[idx] - sigma * eye
        L = np.linalg.inv(-1j / h * eye + 0.5 * np.roll(G, -1, axis=0))
        self.L = L
        self.M = np.ascontiguousarray(L @ (-1j / h * eye - 0.5 * G))
        Phi = kernels.transfer_product(self.M)
        self.F = np.linalg.inv(eye - Phi)

    def __call__(self, b: np.ndarray) -> np.ndarray:
        n, N, m = self.n, self.N, self.m
        Nf = N * m
        c = fourier_coefficients(b.reshape(n, N))
        cf = np.zeros((n, Nf), complex)
        cf[:, Nf // 2 - N // 2:Nf // 2 + N // 2] = c
        B = grid_values(cf) * np.sqrt(m)
        rhs = 0.5 * (B + np.roll(B, -1, axis=1))
        R = np.ascontiguousarray(np.einsum("qab,bq->qa", self.L, rhs))
        y = kernels.cn_sweep(self.M, R, np.zeros(n, complex))
        X = np.empty((Nf, n), complex)
        kernels.cn_sweep(self.M, R, self.F @ y, X)
        cx = fourier_coefficients(X.T)[:, Nf // 2 - N // 2:Nf // 2 + N // 2] / np.sqrt(m)
        return grid_values(cx).ravel()


@dataclass(frozen=True)
class EigenpairResult:
    """Constrained Floquet eigenpair.

    Attributes:
        quasi_energy: E_lambda.
        eigenvector: lambda, unit norm in the extended space.
        residual_norm: ||(H_F - E_lambda) lambda||, recomputed after the solve.
        overlap_with_target: <Psi(0)|lambda(0)> with lambda(0) normalized.
        iterations: outer inverse-iteration count.
        wrong_state: |overlap| below the detection threshold.
    """

    quasi_energy: complex
    eigenvector: ExtendedVector
    residual_norm: float
    overlap_with_target: complex
    iterations: int
    wrong_state: bool
    norm_estimate: float


def solve_constrained_eigenpair(op: FloquetOperator, target: TargetState, tol: float = 1e-10,
                                max_iter: int = 30, dense_limit: int = 1024,
                                shift: complex | None = None, max_subspace: int = 12) -> EigenpairResult:
    """Shift-and-invert subspace iteration with target-overlap Ritz selection.

    The seed is ``target.psi0`` at every grid point and the first shift is
    E_l (or ``shift`` when given).  Every iteration solves (H_F - sigma) y = u
    for the current Ritz vector u, adds y to the search space and picks the
    Ritz pair whose t = 0 slice overlaps the target most; among pairs within
    10% of that overlap the one nearest sigma wins, which settles ties between
    Floquet replicas E + m w.  The selected Ritz value becomes the next shift.
    If half of ``max_iter`` passes without convergence, selection falls back to
    the Ritz value nearest sigma, so a target that no eigenvector resembles
    still ends on an eigenpair, reported with ``wrong_state`` set.

    Systems with n*N <= ``dense_limit`` are LU-factorized; larger ones use
    GMRES right-preconditioned by :class:`CrankNicolsonPreconditioner`.

    Raises:
        ConvergenceError: if ``max_iter`` iterations do not reach
            ``tol * norm_estimate``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n, N = op.shape
    size = n * N
    A = lambda v: apply(op, v)  # noqa: E731
    threshold = tol * op.norm_estimate
    dense = dense_assemble(op) if size <= dense_limit else None

    def overlap(v):
        v0 = v.reshape(n, N)[:, 0]
        nv = np.linalg.norm(v0)
        return abs(np.vdot(target.psi0, v0)) / nv if nv > 0 else 0.0

    def solve(sigma, u):
        if dense is not None:
            return scipy.linalg.lu_solve(scipy.linalg.lu_factor(dense - sigma * np.eye(size)), u)
        P = CrankNicolsonPreconditioner(op, sigma + 0.5j * op.grid.omega)
        shifted = LinearOperator((size, size), matvec=lambda v: (lambda w: A(w) - sigma * w)(P(v)), dtype=complex)
        z, _ = gmres(shifted, u, rtol=1e-12, atol=0.0, restart=100, maxiter=3)
        return P(z)

    u = np.repeat(target.psi0[:, None], N, axis=1).ravel()
    u = u / np.linalg.norm(u)
    Au = A(u)
    theta = np.vdot(u, Au)
    res = float(np.linalg.norm(Au - theta * u))
    sigma = complex(op.model.energies[target.anchor] if shift is None else shift)
    V, AV = [u], [Au]
    it = 0
    while res > threshold:
        if it >= max_iter:
            raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {res:.3e})", res, it)
        it += 1
        y = solve(sigma, u)
        for _ in range(2):
            for v in V:
                y = y - np.vdot(v, y) * v
        ny = np.linalg.norm(y)
        if ny == 0 or not np.isfinite(ny):
            raise ConvergenceError("search space collapsed", res, it)
        y = y / ny
        V.append(y)
        AV.append(A(y))
        Vm, AVm = np.array(V).T, np.array(AV).T
        vals, vecs = np.linalg.eig(Vm.conj().T @ AVm)
        ritz = Vm @ vecs
        ov = np.array([overlap(z) for z in ritz.T])
        ok = np.flatnonzero(ov >= 0.9 * ov.max()) if it <= max_iter // 2 else np.arange(ov.size)
        i = ok[np.argmin(np.abs(vals[ok] - sigma))]
        u = ritz[:, i] / np.linalg.norm(ritz[:, i])
        Au = AVm @ vecs[:, i] / np.linalg.norm(ritz[:, i])
        theta = vals[i]
        res = float(np.linalg.norm(Au - theta * u))
        sigma = complex(theta)
        if len(V) >= max_subspace:
            V, AV = [u], [A(u)]
    Au = A(u)
    theta = np.vdot(u, Au)
    res = float(np.linalg.norm(Au - theta * u))
    X = u.reshape(n, N)
    lam0 = X[:, 0] / np.linalg.norm(X[:, 0])
    ov0 = complex(np.vdot(target.psi0, lam0))
    return EigenpairResult(
        quasi_energy=complex(theta),
        eigenvector=ExtendedVector(X, Representation.TIME_GRID, op.grid),
        residual_norm=res,
        overlap_with_target=ov0,
        iterations=it,
        wrong_state=abs(ov0) < WRONG_STATE_THRESHOLD,
        norm_estimate=op.norm_estimate,
    )

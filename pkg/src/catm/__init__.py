"""Constrained adiabatic trajectory propagation on a periodic time grid."""

from .absorber import (AbsorberShape, AbsorberSpec, Gate, PotentialForm, TargetState,
                       analytic_interval_solution_corrected, analytic_interval_solution_first, basis_matrix,
                       decay_factor, inverse_basis_matrix, potential_block_corrected, potential_block_diagonal,
                       potential_block_first, required_amplitude, select_anchor_channel, window_absorber)
from .floquet import (ConvergenceError, EigenpairResult, FloquetOperator, apply, build_operator, dense_assemble,
                      solve_constrained_eigenpair)
from .hilbert import (ChannelBasis, ExtendedVector, Representation, TimeGrid, apply_time_derivative, to_fourier,
                      to_time_grid)
from .kernels import BACKEND
from .models import (Envelope, ModelSystem, PulseSpec, coupling_operator, field_amplitude, field_nodes,
                     make_ladder, make_two_level)
from .oracle import IntervalForm, OdeSolution, StiffnessError, integrate_interval_ode, integrate_tdse
from .propagate import (PropagationError, PropagationResult, SolverParams, StepPlan, StepResult,
                        catm_multi_step, catm_single_step, dissociation_series, populations_series,
                        verify_alpha)

__version__ = "0.1.0"

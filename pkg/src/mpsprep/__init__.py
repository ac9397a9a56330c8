"""mpsprep: compile matrix product states into shallow preparation circuits.

The library disentangles an MPS with brickwall layers of optimized two-qubit
gates (minimizing bond entanglement entropies) and emits the inverse circuit,
which prepares the state from |0...0>.  See the README for a tour.
"""

from .driver import (DisentangleConfig, DisentangleReport, OptimizerOptions,
                     disentangle, eps_to_eps_site, optimize_gate, overlap_error)
from .entropy import (analytic_gradient_theta0, fd_gradient, local_cost,
                      renyi_entropy, tail_weight)
from .gates import (Circuit, CircuitLayer, SingleQubitReadoff, TwoQubitGateParams,
                    apply_circuit, apply_gate, export_gate_list, gate_matrix,
                    load_circuit, readoff_single_qubit, save_circuit)
from .mps import (GammaLambdaMPS, InvariantViolation, Spectrum, canonicalize,
                  load_mps, overlap, product_mps, save_mps, schmidt_spectrum,
                  to_statevector, truncate, zero_state_mps)
from .states import (CODES, EdResult, HamiltonianSpec, StabilizerCode, aklt,
                     cluster, ed_ground_state, ghz, logical_bell)
from .verification import (GradientMomentStats, gradient_moment_stats,
                           haar_isometry, haar_unitary, prep_error_bound,
                           rank_bound)

__version__ = "0.1.0"

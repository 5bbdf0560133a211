"""Quantum sensing with an emitter coupled to a topological SSH waveguide."""

__version__ = "0.1.0"

from .model import (DisorderSpec, Hamiltonian, ModelParams, NumericalError,  # noqa: F401
                    ParameterDomainError, Spectrum, TopologyMismatchError, build_hamiltonian,
                    chiral_operator, chiral_residual, eigendecompose)
from .boundstates import (BoundStatePair, OutOfGapError, analytic_bound_energy,  # noqa: F401
                          analytic_overlap, analytic_pair, analytic_wavefunction,
                          numeric_bound_states)
from .dynamics import (OccupationTrace, TimeGrid, approx_population,  # noqa: F401
                       excited_population, lindblad_evolve, rabi_reference, survival_amplitude)
from .fisher import (FisherTrace, bound_energy_derivative, fisher_approx,  # noqa: F401
                     fisher_numeric, rabi_fisher)
from .bayes import (EstimationConfig, EstimationResult, PosteriorGrid,  # noqa: F401
                    PriorInterval, average_error, posterior_update, sequential_estimate,
                    simulate_record, squared_relative_error)

"""Strong-coupling pairing model in its doubled thermal representation, the
collective fluctuations that survive the large-N limit, and the charge qubit
circuit they converge to."""

__version__ = "0.1.0"

from .circle import (ChargeBasisTruncation, CircleState, CircuitParams,
                     build_hamiltonian, build_momentum, build_weyl, dyson_circle,
                     dyson_defect, evolve, josephson_current, phase_peaked_state,
                     spectrum)
from .correlators import (ConvergenceResult, FluctuationWord, MesoscopicPrediction,
                          WordFactor, convergence_sweep, correlation_finite_n,
                          mesoscopic_prediction, pair_expectation,
                          single_layer_evolution_element, w_expectation)
from .errors import (NormalPhaseError, NumericalError, ParameterError, ParityError,
                     QfluctError, SolverError, TruncationError)
from .fitting import PowerLawFit, fit_power_law
from .gap import (GapSolution, critical_current_curve, josephson_energy,
                  meanfield_spin_expectations, rescaled_gap, solve_gap)
from .junction import (JunctionBlock, JunctionParams, TransitionElement,
                       build_blocks, circle_element, dyson_junction,
                       dyson_junction_defect, evolution_element, layer_gaps,
                       meso_compare, two_layer_correlator)
from .sectors import (ModelParams, SectorLabel, SectorTable, boltzmann_table,
                      ladder_coefficient, multiplicity, sector_energy)

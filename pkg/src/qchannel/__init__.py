"""Quantum particle in a periodically constricted 2D channel.

Three mutually validating routes to the same physics: effective-1D analytics
(entropic free energy with its leading quantum correction), a quantum
Smoluchowski finite-difference solver, and a microscopic open-system
(Redfield) steady-state transport solver on a lattice.
"""

from .fickjacobs import (FluxResult, FreeEnergyProfile, classical_free_energy,
                         enthalpic_1d_barrier, equilibrium_density,
                         flux_quantum_factor, free_energy_barrier,
                         free_energy_profile, quantum_free_energy_correction,
                         steady_state_1d)
from .lattice import (GridSpec, SpectralDecomposition, assemble_hamiltonian,
                      build_grid, chain_hamiltonian, diagonalize)
from .model import (ChannelParams, DerivedScales, ValidityReport,
                    aspect_ratio, beta_from_lambda, check_validity,
                    derive_scales, k0_from_aspect, lambda_from_experiment,
                    params_at_lambda, potential_eval)
from .redfield import (BathCoefficients, LeadSpec, bath_coefficients,
                       classical_edge_weight, kinetic_rhs, lead_current,
                       steady_state, thermal_edge_weight)
from .smoluchowski import (PdeField, solve_equilibrium_1d, solve_steady_2d)
from .sweep import (ExtremumResult, SweepConfig, convergence_study,
                    locate_extremum, run_sweep, scaling_fit)
from .thermal import (MarginalDensity, mismatch_score, numeric_barrier,
                      thermal_marginal)

__version__ = "0.1.0"

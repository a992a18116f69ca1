#!/usr/bin/env python3
"""
Ensemble Kernel - Response-Kernel Laboratory for Finite Fermion Systems

A desk-scale package for studying which potentials leave the linear density
response of a finite many-fermion ensemble unchanged:
- Fock bases, Hubbard-type and custom Hamiltonians
- Exact diagonalization with degeneracy grouping
- Pure, custom, canonical and grand canonical ensembles
- Probe families, 1RDM and natural orbitals, commutants
- Lehmann response, necessary map, sufficiency residuals, kernel reports
- RK4 dynamics certification and a JSON/CSV command line

Usage:
    from ensemble_kernel import ResponseLab

    lab = ResponseLab({'name': 'hubbard_chain', 'sites': 2, 't': 1.0, 'U': 2.0},
                      sector={'N': 2},
                      ensemble={'kind': 'canonical', 'beta': 1.0},
                      probes='one_body_full')
    report = lab.run_kernel()
    report.kernel_dim      # 4
    report.commutant_dim   # 4
"""

from .exceptions import (CheckFailure, KernelLabError, MonotonicityError, SpectrumError,
                         UnderResolvedGridError, ValidationError)
from .settings import Tolerances
from .fock_space import (FockBasis, ManyBodyOperator, OneBodyCoefficients, Orbital, OrbitalSet, Sector,
                         apply_annihilation, apply_creation, build_basis, build_model, creation_matrix,
                         excitation_matrix, get_available_models, grand_canonical_generator, number_operator,
                         one_body_operator, site_reflection_coefficients, two_body_density_interaction)
from .spectrum import SpectralDecomposition, diagonalize, excitation_gaps
from .ensemble import (Ensemble, EnsembleKind, ExtendedDegenerateStructure, build_ensemble, canonical_weights,
                       check_monotone, custom_weights, extended_degenerate_structure, grand_canonical_weights,
                       pure_ground_state)
from .probes import (NaturalOrbitalData, ProbeSet, build_probes, commutant_basis, ensemble_1rdm,
                     one_body_hermitian_basis, predict_pathological_generators, site_density_probes,
                     spin_density_probes, symmetry_probes)
from .response_kernel import (KernelOptions, KernelReport, NecessaryMap, TransitionMoments, candidate_kernel,
                              chi_time, compute_kernel, kernel_dimension_sweep, necessary_map, necessary_value,
                              static_kernel, static_thermal_response, sufficiency_residual, transition_moments)
from .dynamics import (Certification, PulseSpec, ResponseTrajectory, certify_kernel, convolution_reference,
                       propagate_response, relative_l2_difference)
from .laboratory import ResponseLab

__version__ = "1.0.0"
__all__ = [
    "CheckFailure",
    "KernelLabError",
    "MonotonicityError",
    "SpectrumError",
    "UnderResolvedGridError",
    "ValidationError",
    "Tolerances",
    "FockBasis",
    "ManyBodyOperator",
    "OneBodyCoefficients",
    "Orbital",
    "OrbitalSet",
    "Sector",
    "apply_annihilation",
    "apply_creation",
    "build_basis",
    "build_model",
    "creation_matrix",
    "excitation_matrix",
    "get_available_models",
    "grand_canonical_generator",
    "number_operator",
    "one_body_operator",
    "site_reflection_coefficients",
    "two_body_density_interaction",
    "SpectralDecomposition",
    "diagonalize",
    "excitation_gaps",
    "Ensemble",
    "EnsembleKind",
    "ExtendedDegenerateStructure",
    "build_ensemble",
    "canonical_weights",
    "check_monotone",
    "custom_weights",
    "extended_degenerate_structure",
    "grand_canonical_weights",
    "pure_ground_state",
    "NaturalOrbitalData",
    "ProbeSet",
    "build_probes",
    "commutant_basis",
    "ensemble_1rdm",
    "one_body_hermitian_basis",
    "predict_pathological_generators",
    "site_density_probes",
    "spin_density_probes",
    "symmetry_probes",
    "KernelOptions",
    "KernelReport",
    "NecessaryMap",
    "TransitionMoments",
    "candidate_kernel",
    "chi_time",
    "compute_kernel",
    "kernel_dimension_sweep",
    "necessary_map",
    "necessary_value",
    "static_kernel",
    "static_thermal_response",
    "sufficiency_residual",
    "transition_moments",
    "Certification",
    "PulseSpec",
    "ResponseTrajectory",
    "certify_kernel",
    "convolution_reference",
    "propagate_response",
    "relative_l2_difference",
    "ResponseLab",
]

"""
Tests for the Lehmann response, the necessary map, sufficiency and kernel reports.
"""

import dataclasses
import json

import numpy as np
import pytest

from ensemble_kernel import (KernelOptions, MonotonicityError, Sector, Tolerances, ValidationError, build_model,
                             candidate_kernel, canonical_weights, chi_time, compute_kernel, custom_weights,
                             diagonalize, grand_canonical_weights, kernel_dimension_sweep, necessary_map,
                             necessary_value, one_body_hermitian_basis, pure_ground_state, site_density_probes,
                             site_reflection_coefficients, static_thermal_response, sufficiency_residual,
                             symmetry_probes, transition_moments)
from ensemble_kernel.probes import ProbeSet, custom_probes
from ensemble_kernel.response_kernel import NecessaryMap, static_kernel
from ensemble_kernel.util import same_subspace

from conftest import DIMER

CHAIN = {'name': 'hubbard_chain', 'sites': 3, 't': 1.0, 'U': 4.0}


def _two_level_probes(model):
    return custom_probes(model.basis, [[[0.0, 1.0], [1.0, 0.0]]], ['X'])


def _regauged(spectrum, group, seed=0):
    """Mix the eigenvectors of one degenerate group by a random unitary."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(len(group), len(group))) + 1j * rng.normal(size=(len(group), len(group)))
    unitary, _ = np.linalg.qr(z)
    vectors = np.array(spectrum.vectors)
    vectors[:, list(group)] = vectors[:, list(group)] @ unitary
    return dataclasses.replace(spectrum, vectors=vectors)


def _flat_model():
    return build_model({'name': 'custom', 'orbitals': 2, 'h': [[0.0, 0.0], [0.0, 0.0]]}, Sector(1))


# ============================================================================
# Lehmann response
# ============================================================================

def test_transition_moments_are_hermitian(dimer_n2, dimer_n2_spectrum):
    moments = transition_moments(one_body_hermitian_basis(dimer_n2.basis), dimer_n2_spectrum)
    assert moments.q.shape == (16, 6, 6)
    assert np.allclose(moments.q, np.conj(np.transpose(moments.q, (0, 2, 1))), atol=1e-12)


def test_chi_two_level(two_level):
    probes = _two_level_probes(two_level)
    ens = pure_ground_state(diagonalize(two_level))
    taus = np.linspace(0.0, 10.0, 101)
    chi = chi_time(probes, ens, taus)
    assert chi.shape == (101, 1, 1)
    assert np.allclose(chi[:, 0, 0], -2.0 * np.sin(taus), atol=1e-12)
    assert chi_time(probes, ens, 1.0).shape == (1, 1)


def test_chi_is_causal(dimer_n2, dimer_n2_spectrum):
    probes = site_density_probes(dimer_n2.basis)
    ens = canonical_weights(dimer_n2_spectrum, 1.0)
    chi = chi_time(probes, ens, [-2.0, -0.5, 0.0, 0.7])
    assert np.all(chi[:2] == 0.0)
    assert np.allclose(chi[2], 0.0, atol=1e-14)
    assert np.max(np.abs(chi[3])) > 1e-3


def test_chi_rejects_non_finite_tau(two_level):
    with pytest.raises(ValidationError):
        chi_time(_two_level_probes(two_level), pure_ground_state(diagonalize(two_level)), [np.nan])


# ============================================================================
# Necessary condition
# ============================================================================

def test_necessary_map_rows(dimer_sz0):
    spectrum = diagonalize(dimer_sz0)
    nmap = necessary_map(site_density_probes(dimer_sz0.basis), canonical_weights(spectrum, 1.0))
    assert nmap.n_rows == 6
    assert all(k > l for k, l in nmap.rows)
    assert np.all(nmap.pair_weights > 0)
    assert nmap.realified.shape == (12, 2)


def test_necessary_map_skips_degenerate_pairs(dimer_n2, dimer_n2_spectrum):
    nmap = necessary_map(site_density_probes(dimer_n2.basis), canonical_weights(dimer_n2_spectrum, 1.0))
    assert (2, 1) not in nmap.rows and (3, 1) not in nmap.rows


def test_necessary_map_keeps_underflowed_pairs(dimer_n2, dimer_n2_spectrum):
    probes = one_body_hermitian_basis(dimer_n2.basis)
    warm = necessary_map(probes, canonical_weights(dimer_n2_spectrum, 1.0))
    cold = necessary_map(probes, canonical_weights(dimer_n2_spectrum, 50.0))
    assert cold.rows == warm.rows
    assert np.all(cold.pair_weights >= 0)


def test_candidate_kernel_ignores_row_scaling(dimer_sz0):
    spectrum = diagonalize(dimer_sz0)
    nmap = necessary_map(one_body_hermitian_basis(dimer_sz0.basis), canonical_weights(spectrum, 1.0))
    scales = np.geomspace(0.1, 10.0, nmap.n_rows)
    scaled = NecessaryMap(nmap.rows, nmap.matrix * scales[:, None], nmap.pair_weights)
    original, rescaled = candidate_kernel(nmap), candidate_kernel(scaled)
    assert rescaled.dim == original.dim
    assert same_subspace(original.basis, rescaled.basis, 1e-8)[0]


def test_candidate_kernel_of_site_densities(dimer_sz0):
    spectrum = diagonalize(dimer_sz0)
    nmap = necessary_map(site_density_probes(dimer_sz0.basis), canonical_weights(spectrum, 1.0))
    candidate = candidate_kernel(nmap)
    assert candidate.dim == 1
    assert abs(abs(candidate.basis[0, 0]) - 1.0 / np.sqrt(2.0)) < 1e-10


def test_necessary_value_vanishes_on_kernel(dimer_sz0):
    spectrum = diagonalize(dimer_sz0)
    probes = site_density_probes(dimer_sz0.basis)
    ens = canonical_weights(spectrum, 1.0)
    for s in (0.1, 1.0, 10.0):
        assert abs(necessary_value([1.0, 1.0], s, probes, ens)) < 1e-20
        assert necessary_value([1.0, -1.0], s, probes, ens) > 1e-6
    with pytest.raises(ValidationError):
        necessary_value([1.0, 1.0], 0.0, probes, ens)


def test_necessary_map_rejects_non_monotone(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(MonotonicityError) as info:
        necessary_map(site_density_probes(dimer_sz0.basis), ens)
    assert len(info.value.violations) == 6
    assert isinstance(info.value, ValidationError)


# ============================================================================
# Sufficiency
# ============================================================================

def test_sufficiency_forms_agree_on_flat_model():
    model = _flat_model()
    probes = one_body_hermitian_basis(model.basis)
    ens = custom_weights(diagonalize(model), [0.6, 0.4])
    pairwise, commutator_form = sufficiency_residual([0.0, 0.0, 1.0, 0.0], probes, ens)
    assert np.allclose(pairwise, commutator_form, atol=1e-14)
    assert np.max(np.abs(pairwise)) == pytest.approx(0.4)
    # Occupations commute with the ensemble
    pairwise, commutator_form = sufficiency_residual([1.0, -2.0, 0.0, 0.0], probes, ens)
    assert np.allclose(pairwise, 0.0) and np.allclose(commutator_form, 0.0)


def test_flat_model_kernel_depends_on_weights():
    model = _flat_model()
    probes = one_body_hermitian_basis(model.basis)
    spectrum = diagonalize(model)

    unequal = compute_kernel(probes, custom_weights(spectrum, [0.6, 0.4]))
    assert unequal.candidate_dim == 4
    assert unequal.kernel_dim == 2
    assert unequal.contains([1.0, 0.0, 0.0, 0.0])
    assert unequal.contains([0.0, 1.0, 0.0, 0.0])
    assert not unequal.contains([0.0, 0.0, 1.0, 0.0])
    assert unequal.candidate_passes.count(True) < 4

    equal = compute_kernel(probes, custom_weights(spectrum, [0.5, 0.5]))
    assert equal.kernel_dim == 4


# ============================================================================
# Kernel reports
# ============================================================================

def test_canonical_kernel_equals_commutant(dimer_n2, dimer_n2_spectrum):
    probes = one_body_hermitian_basis(dimer_n2.basis)
    report = compute_kernel(probes, canonical_weights(dimer_n2_spectrum, 1.0))
    assert report.kernel_dim == 4
    assert report.commutant_dim == 4
    assert report.equals_commutant
    assert report.max_principal_angle < 1e-8
    assert report.sufficiency_skipped
    assert report.excess_dimension == 0
    assert report.pathological is None
    for g in symmetry_probes(dimer_n2.basis).coefficients:
        assert report.contains(probes.expansion_of(g))


def test_grand_canonical_kernel(dimer_fock):
    probes = one_body_hermitian_basis(dimer_fock.basis)
    ens = grand_canonical_weights(diagonalize(dimer_fock), beta=1.0, mu=1.0)
    report = compute_kernel(probes, ens)
    assert report.kernel_dim == 4
    assert report.equals_commutant
    assert report.ensemble_kind == 'grand_canonical'


@pytest.mark.parametrize("beta", [20.0, 50.0])
def test_low_temperature_kernel_equals_commutant(dimer_n2, dimer_n2_spectrum, beta):
    report = compute_kernel(one_body_hermitian_basis(dimer_n2.basis), canonical_weights(dimer_n2_spectrum, beta))
    assert report.kernel_dim == 4
    assert report.equals_commutant
    assert report.commutant_note is None


def test_low_temperature_grand_canonical_kernel(dimer_fock):
    ens = grand_canonical_weights(diagonalize(dimer_fock), beta=50.0, mu=1.0)
    report = compute_kernel(one_body_hermitian_basis(dimer_fock.basis), ens)
    assert report.kernel_dim == 4
    assert report.equals_commutant


def test_infinite_temperature_kernel_is_probe_span(dimer_n2, dimer_n2_spectrum):
    report = compute_kernel(one_body_hermitian_basis(dimer_n2.basis), canonical_weights(dimer_n2_spectrum, 0.0))
    assert report.n_pairs == 0
    assert report.kernel_dim == 16
    assert report.commutant_dim == 4
    assert not report.equals_commutant
    assert 'infinite temperature' in report.commutant_note
    assert report.to_dict()['commutant_note'] == report.commutant_note


def test_kernel_is_invariant_under_degenerate_regauging(dimer_n2, dimer_n2_spectrum):
    triplet = next(group for group in dimer_n2_spectrum.groups if len(group) == 3)
    probes = one_body_hermitian_basis(dimer_n2.basis)
    reference = compute_kernel(probes, canonical_weights(dimer_n2_spectrum, 1.0))
    for seed in (0, 1):
        regauged = compute_kernel(probes, canonical_weights(_regauged(dimer_n2_spectrum, triplet, seed), 1.0))
        assert regauged.kernel_dim == reference.kernel_dim
        equal, angle = same_subspace(reference.kernel_basis, regauged.kernel_basis, 1e-8)
        assert equal and angle <= 1e-8


def test_kernel_follows_probe_order(dimer_n2, dimer_n2_spectrum):
    probes = one_body_hermitian_basis(dimer_n2.basis)
    reversed_probes = ProbeSet(probes.probes[::-1], probes.labels[::-1], probes.span_kind)
    ens = canonical_weights(dimer_n2_spectrum, 1.0)
    forward = compute_kernel(probes, ens)
    backward = compute_kernel(reversed_probes, ens)
    assert same_subspace(forward.kernel_basis, backward.kernel_basis[::-1], 1e-8)[0]


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_chain_density_kernel_is_constant_shift(beta):
    chain = build_model(CHAIN, Sector(3, 0.5))
    report = compute_kernel(site_density_probes(chain.basis), canonical_weights(diagonalize(chain), beta))
    assert report.kernel_dim == 1
    assert abs(abs(report.kernel_basis[:, 0] @ np.ones(3)) / np.sqrt(3.0) - 1.0) < 1e-10
    assert report.candidate.gap >= 1e6


def test_pure_kernel_exceeds_commutant(dimer_n2, dimer_n2_spectrum):
    report = compute_kernel(one_body_hermitian_basis(dimer_n2.basis), pure_ground_state(dimer_n2_spectrum))
    assert report.commutant_dim == 4
    assert report.kernel_dim > 4
    assert report.excess_dimension == report.kernel_dim - 4
    assert not report.sufficiency_skipped


def test_pathological_generators_lie_in_pure_kernel():
    model = build_model({**DIMER, 'U': 0.0}, Sector(2))
    report = compute_kernel(one_body_hermitian_basis(model.basis), pure_ground_state(diagonalize(model)))
    assert len(report.pathological) == 8
    assert all(entry['in_probe_span'] and entry['in_kernel'] for entry in report.pathological)


def test_single_particle_sector_has_excess_reflection():
    canonical_model = build_model(DIMER, Sector(1))
    probes = one_body_hermitian_basis(canonical_model.basis)
    canonical = compute_kernel(probes, canonical_weights(diagonalize(canonical_model), 1.0))

    fock_model = build_model(DIMER, Sector())
    fock_probes = one_body_hermitian_basis(fock_model.basis)
    grand = compute_kernel(fock_probes, grand_canonical_weights(diagonalize(fock_model), 1.0, 1.0))

    assert canonical.kernel_dim == 8
    assert grand.kernel_dim == 4
    reflection = site_reflection_coefficients(canonical_model.basis.orbitals)
    assert canonical.contains(probes.expansion_of(reflection))
    assert not grand.contains(fock_probes.expansion_of(reflection))


def test_site_density_kernel_has_clear_gap(dimer_n2, dimer_n2_spectrum):
    report = compute_kernel(site_density_probes(dimer_n2.basis), canonical_weights(dimer_n2_spectrum, 1.0))
    assert report.kernel_dim == 1
    assert report.candidate.gap >= 1e6


def test_kernel_rejects_non_monotone(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(MonotonicityError):
        compute_kernel(site_density_probes(dimer_sz0.basis), ens)


def test_report_is_json_ready(dimer_n2, dimer_n2_spectrum):
    report = compute_kernel(one_body_hermitian_basis(dimer_n2.basis), pure_ground_state(dimer_n2_spectrum))
    payload = json.loads(json.dumps(report.to_dict(), allow_nan=False))
    assert payload['kernel_dim'] == report.kernel_dim
    assert len(payload['kernel_basis']) == report.kernel_dim
    assert len(payload['probe_labels']) == 16
    assert payload['tolerances']['tol_rank'] == Tolerances().tol_rank


def test_options_skip_pathological():
    model = build_model({**DIMER, 'U': 0.0}, Sector(2))
    options = KernelOptions(predict_pathological=False)
    report = compute_kernel(one_body_hermitian_basis(model.basis), pure_ground_state(diagonalize(model)), options)
    assert report.pathological is None


# ============================================================================
# Sweeps and static response
# ============================================================================

def test_beta_sweep_is_constant(dimer_n2, dimer_n2_spectrum):
    rows = kernel_dimension_sweep(dimer_n2, one_body_hermitian_basis(dimer_n2.basis), [0.5, 1.0, 2.0, 5.0],
                                  spectrum=dimer_n2_spectrum)
    assert [row['beta'] for row in rows] == [0.5, 1.0, 2.0, 5.0]
    assert {row['kernel_dim'] for row in rows} == {4}


def test_beta_sweep_survives_weight_underflow(dimer_n2, dimer_n2_spectrum):
    rows = kernel_dimension_sweep(dimer_n2, one_body_hermitian_basis(dimer_n2.basis), [1.0, 10.0, 20.0, 50.0],
                                  spectrum=dimer_n2_spectrum)
    assert {row['kernel_dim'] for row in rows} == {4}


def test_site_density_sweep_is_constant(dimer_n2):
    rows = kernel_dimension_sweep(dimer_n2, site_density_probes(dimer_n2.basis), [0.5, 1.0, 2.0, 5.0])
    assert {row['kernel_dim'] for row in rows} == {1}


def test_grand_canonical_sweep(dimer_fock):
    rows = kernel_dimension_sweep(dimer_fock, one_body_hermitian_basis(dimer_fock.basis), [0.5, 2.0], mu=1.0)
    assert {row['kernel_dim'] for row in rows} == {4}


def test_sweep_needs_betas(dimer_n2):
    with pytest.raises(ValidationError):
        kernel_dimension_sweep(dimer_n2, site_density_probes(dimer_n2.basis), [])


def test_static_response_number_direction(dimer_n2):
    probes = symmetry_probes(dimer_n2.basis)
    number = static_thermal_response(dimer_n2, probes, 'canonical', 1.0, None, [1.0, 0.0, 0.0, 0.0])
    assert np.max(np.abs(number)) <= 1e-9
    for v in ([0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0]):
        assert np.max(np.abs(static_thermal_response(dimer_n2, probes, 'canonical', 1.0, None, v))) >= 1e-3


def test_static_response_grand_canonical_number(dimer_fock):
    probes = symmetry_probes(dimer_fock.basis)
    response = static_thermal_response(dimer_fock, probes, 'grand_canonical', 1.0, 1.0, [1.0, 0.0, 0.0, 0.0])
    assert abs(response[0]) > 1e-3


def test_static_response_errors(dimer_n2, dimer_fock):
    probes = symmetry_probes(dimer_n2.basis)
    with pytest.raises(ValidationError):
        static_thermal_response(dimer_n2, probes, 'pure', 1.0, None, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        static_thermal_response(dimer_n2, probes, 'grand_canonical', 1.0, 1.0, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        static_thermal_response(dimer_fock, symmetry_probes(dimer_fock.basis), 'grand_canonical', 1.0, None,
                                [1.0, 0.0, 0.0, 0.0])


def test_static_kernel_contains_number(dimer_n2):
    result = static_kernel(dimer_n2, symmetry_probes(dimer_n2.basis), 'canonical', 1.0)
    v = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.linalg.norm(v - result.basis @ (result.basis.T @ v)) < 1e-6

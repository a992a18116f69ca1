"""
Tests for probe families, the 1RDM with natural orbitals, and commutants.
"""

import numpy as np
import pytest

from ensemble_kernel import (Sector, ValidationError, build_model, build_probes, canonical_weights, commutant_basis,
                             diagonalize, ensemble_1rdm, one_body_hermitian_basis, predict_pathological_generators,
                             pure_ground_state, site_density_probes, site_reflection_coefficients,
                             spin_density_probes, symmetry_probes)
from ensemble_kernel.probes import custom_probes, get_available_probes

from conftest import DIMER


def _in_span(v, basis, tol=1e-8):
    residual = v - basis @ (basis.T @ v)
    return np.linalg.norm(residual) <= tol * np.linalg.norm(v)


# ============================================================================
# Probe families
# ============================================================================

def test_site_density_probes(dimer_n2):
    probes = site_density_probes(dimer_n2.basis)
    assert probes.labels == ('n(0)', 'n(1)')
    assert probes.matrices.shape == (2, 6, 6)
    assert probes.is_one_body
    # n(0) + n(1) = N = 2 on the sector
    assert np.allclose(probes.direction([1.0, 1.0]), 2.0 * np.eye(6))


def test_spin_density_probes(dimer_n2):
    probes = spin_density_probes(dimer_n2.basis)
    assert probes.labels == ('n(0u)', 'n(0d)', 'n(1u)', 'n(1d)')


def test_one_body_basis_layout_and_orthogonality(dimer_n2):
    probes = one_body_hermitian_basis(dimer_n2.basis)
    assert len(probes) == 16
    assert probes.labels[:5] == ('E(0,0)', 'E(1,1)', 'E(2,2)', 'E(3,3)', 'S(0,1)')
    assert probes.labels[10] == 'A(0,1)'
    gram = np.array([[np.trace(a @ b).real for b in probes.coefficients] for a in probes.coefficients])
    assert np.allclose(gram, np.diag(np.diag(gram)))


def test_symmetry_probes_lie_in_one_body_span(dimer_n2):
    full = one_body_hermitian_basis(dimer_n2.basis)
    symmetry = symmetry_probes(dimer_n2.basis)
    assert symmetry.labels == ('N', 'Sx', 'Sy', 'Sz')
    stack = np.stack(full.coefficients)
    for g in symmetry.coefficients:
        v = full.expansion_of(g)
        assert np.allclose(np.tensordot(v, stack, axes=1), g, atol=1e-12)
    assert np.allclose(full.expansion_of(symmetry.coefficients[0]), [1, 1, 1, 1] + [0] * 12, atol=1e-12)


def test_symmetry_probes_without_spin():
    model = build_model({'name': 'hubbard_chain', 'sites': 3, 'spinful': False}, Sector(1))
    assert symmetry_probes(model.basis).labels == ('N',)


def test_probe_scale(dimer_n2):
    probes = site_density_probes(dimer_n2.basis)
    assert probes.scale == pytest.approx(2.0)


def test_custom_probes(dimer_n2):
    h = np.zeros((4, 4))
    h[0, 2] = h[2, 0] = 1.0
    probes = build_probes(dimer_n2.basis, {'custom': [h.tolist()], 'labels': ['hop_up']})
    assert probes.labels == ('hop_up',)
    assert probes.span_kind == 'custom'
    assert custom_probes(dimer_n2.basis, [h]).labels == ('Q0',)


@pytest.mark.parametrize("spec, field", [
    ('plaquette', 'probes'),
    ({'custom': []}, 'probes.custom'),
    ({'custom': [np.eye(4).tolist()], 'labels': ['a', 'b']}, 'probes.labels'),
    ({'matrices': []}, 'probes.matrices'),
])
def test_build_probes_errors(dimer_n2, spec, field):
    with pytest.raises(ValidationError) as info:
        build_probes(dimer_n2.basis, spec)
    assert info.value.field == field


def test_custom_probe_must_be_hermitian(dimer_n2):
    h = np.zeros((4, 4))
    h[0, 1] = 1.0
    with pytest.raises(ValidationError):
        custom_probes(dimer_n2.basis, [h.tolist()])


def test_available_probes():
    assert get_available_probes() == ['site_density', 'spin_density', 'one_body_full', 'symmetry', 'custom']


# ============================================================================
# 1RDM and natural orbitals
# ============================================================================

def test_1rdm_of_single_particle_bonding_state():
    model = build_model({'name': 'custom', 'orbitals': 2, 'h': [[0.0, 1.0], [1.0, 0.0]]}, Sector(1))
    nodata = ensemble_1rdm(pure_ground_state(diagonalize(model)))
    assert np.allclose(nodata.gamma, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
    assert np.allclose(nodata.occupations, [1.0, 0.0], atol=1e-12)


def test_1rdm_non_interacting_dimer_is_idempotent():
    model = build_model({**DIMER, 'U': 0.0}, Sector(2))
    nodata = ensemble_1rdm(pure_ground_state(diagonalize(model)))
    assert np.allclose(nodata.occupations, [1.0, 1.0, 0.0, 0.0], atol=1e-10)
    assert nodata.mean_particle_number == pytest.approx(2.0)


def test_1rdm_interacting_dimer_is_fractional(dimer_n2_spectrum):
    nodata = ensemble_1rdm(pure_ground_state(dimer_n2_spectrum))
    assert np.allclose(nodata.gamma, nodata.gamma.conj().T)
    assert np.all(np.diff(nodata.occupations) <= 1e-12)
    assert np.all((nodata.occupations > 1e-3) & (nodata.occupations < 1.0 - 1e-3))
    assert nodata.mean_particle_number == pytest.approx(2.0)


def test_1rdm_of_thermal_ensemble(dimer_n2_spectrum):
    nodata = ensemble_1rdm(canonical_weights(dimer_n2_spectrum, 1.0))
    assert np.trace(nodata.gamma).real == pytest.approx(2.0)
    assert np.all(nodata.occupations >= -1e-12) and np.all(nodata.occupations <= 1.0 + 1e-12)


def test_pathological_generators_non_interacting_dimer():
    model = build_model({**DIMER, 'U': 0.0}, Sector(2))
    nodata = ensemble_1rdm(pure_ground_state(diagonalize(model)))
    generators = predict_pathological_generators(nodata, interacting=False, n_particles=2)
    assert len(generators) == 8
    for g in generators:
        assert np.allclose(g, g.conj().T)


def test_pathological_generators_interacting_dimer(dimer_n2_spectrum):
    nodata = ensemble_1rdm(pure_ground_state(dimer_n2_spectrum))
    # No natural occupation is pinned at 0 or 1, degenerate groups are not used
    assert predict_pathological_generators(nodata, interacting=True) == []


# ============================================================================
# Commutant
# ============================================================================

def test_dimer_commutant_is_spin_and_number(dimer_n2):
    probes = one_body_hermitian_basis(dimer_n2.basis)
    commutant = commutant_basis(dimer_n2, probes)
    assert commutant.dim == 4
    for g in symmetry_probes(dimer_n2.basis).coefficients:
        assert _in_span(probes.expansion_of(g), commutant.basis)


def test_site_density_commutant_is_number(dimer_n2):
    commutant = commutant_basis(dimer_n2, site_density_probes(dimer_n2.basis))
    assert commutant.dim == 1
    assert _in_span(np.array([1.0, 1.0]), commutant.basis)


def test_single_particle_commutant_includes_reflection():
    model = build_model(DIMER, Sector(1))
    probes = one_body_hermitian_basis(model.basis)
    commutant = commutant_basis(model, probes)
    assert commutant.dim == 8
    reflection = probes.expansion_of(site_reflection_coefficients(model.basis.orbitals))
    assert _in_span(reflection, commutant.basis)

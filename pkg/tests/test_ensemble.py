"""
Tests for ensemble weights, monotonicity and the extended degenerate structure.
"""

import numpy as np
import pytest

from ensemble_kernel import (EnsembleKind, Sector, ValidationError, build_ensemble, build_model, canonical_weights,
                             check_monotone, custom_weights, diagonalize, extended_degenerate_structure,
                             grand_canonical_weights, pure_ground_state)


def test_pure_ground_state(dimer_n2_spectrum):
    ens = pure_ground_state(dimer_n2_spectrum)
    assert ens.kind == EnsembleKind.PURE
    assert ens.weights.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert ens.members.tolist() == [0]
    assert check_monotone(ens) == []


def test_pure_rejects_degenerate_ground_state():
    model = build_model({'name': 'custom', 'orbitals': 2, 'h': [[0.0, 0.0], [0.0, 0.0]]}, Sector(1))
    with pytest.raises(ValidationError) as info:
        pure_ground_state(diagonalize(model))
    assert info.value.field == 'ensemble.kind'


def test_canonical_weights(dimer_n2_spectrum):
    ens = canonical_weights(dimer_n2_spectrum, beta=1.0)
    levels = dimer_n2_spectrum.level_energies
    expected = np.exp(-(levels - levels[0]))
    assert np.allclose(ens.weights, expected / expected.sum(), rtol=1e-12)
    # Degenerate triplet members share one weight exactly
    assert ens.weights[1] == ens.weights[2] == ens.weights[3]
    assert ens.mu is None
    assert ens.energy_only


def test_infinite_temperature_is_uniform(dimer_n2_spectrum):
    ens = canonical_weights(dimer_n2_spectrum, beta=0.0)
    assert np.allclose(ens.weights, 1.0 / 6.0)


@pytest.mark.parametrize("beta", [-1.0, float('inf'), True, 'hot'])
def test_invalid_beta(dimer_n2_spectrum, beta):
    with pytest.raises(ValidationError) as info:
        canonical_weights(dimer_n2_spectrum, beta)
    assert info.value.field == 'ensemble.beta'


def test_grand_canonical_rediagonalizes(dimer_fock):
    spectrum = diagonalize(dimer_fock)
    ens = grand_canonical_weights(spectrum, beta=1.0, mu=1.0)
    assert ens.spectrum is not spectrum
    assert ens.hamiltonian.chemical_potential == 1.0
    assert ens.dim == 16
    assert abs(ens.weights.sum() - 1.0) < 1e-12
    # Reusing the shifted spectrum keeps it
    again = grand_canonical_weights(ens.spectrum, beta=2.0, mu=1.0)
    assert again.spectrum is ens.spectrum
    with pytest.raises(ValidationError):
        grand_canonical_weights(ens.spectrum, beta=1.0, mu=0.5)


def test_grand_canonical_needs_full_fock(dimer_n2_spectrum):
    with pytest.raises(ValidationError) as info:
        grand_canonical_weights(dimer_n2_spectrum, beta=1.0, mu=1.0)
    assert info.value.field == 'sector'


def test_custom_weights_are_normalized(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [2, 1, 1, 0])
    assert ens.weights.tolist() == [0.5, 0.25, 0.25, 0.0]
    assert ens.kind == EnsembleKind.CUSTOM


@pytest.mark.parametrize("weights", [[1, 1, 1], [1, -1, 1, 1], [0, 0, 0, 0], [1, float('nan'), 0, 0]])
def test_invalid_custom_weights(dimer_sz0, weights):
    with pytest.raises(ValidationError):
        custom_weights(diagonalize(dimer_sz0), weights)


def test_inverted_weights_violate_monotonicity(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [0.1, 0.2, 0.3, 0.4])
    violations = check_monotone(ens)
    assert violations == [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]
    assert ens.to_dict()['monotone_violations'] == [[1, 0], [2, 0], [2, 1], [3, 0], [3, 1], [3, 2]]


def test_equal_weights_on_distinct_levels_are_monotone(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [0.5, 0.5, 0.0, 0.0])
    assert check_monotone(ens) == []


def test_extended_degenerate_structure_thermal(dimer_n2_spectrum):
    eds = extended_degenerate_structure(canonical_weights(dimer_n2_spectrum, 1.0))
    assert not eds.has_reduced_pairs
    assert eds.D[1] == frozenset({1, 2, 3})
    assert eds.D[0] == frozenset({0})


def test_extended_degenerate_structure_ignores_underflowed_weights(dimer_n2_spectrum):
    eds = extended_degenerate_structure(canonical_weights(dimer_n2_spectrum, 50.0))
    assert not eds.has_reduced_pairs
    assert eds.D[0] == frozenset({0})
    assert eds.D[1] == frozenset({1, 2, 3})
    assert eds.D[4] == frozenset({4})
    assert eds.D[5] == frozenset({5})


def test_extended_degenerate_structure_at_infinite_temperature(dimer_n2_spectrum):
    ens = canonical_weights(dimer_n2_spectrum, 0.0)
    assert ens.infinite_temperature
    eds = extended_degenerate_structure(ens)
    assert all(members == frozenset(range(6)) for members in eds.D)
    assert not eds.has_reduced_pairs


def test_extended_degenerate_structure_reduced_pairs():
    model = build_model({'name': 'custom', 'orbitals': 2, 'h': [[0.0, 0.0], [0.0, 0.0]]}, Sector(1))
    ens = custom_weights(diagonalize(model), [0.6, 0.4])
    eds = extended_degenerate_structure(ens)
    assert eds.has_reduced_pairs
    assert eds.Dr == (frozenset({1}), frozenset({0}))
    assert eds.D == (frozenset({0, 1}), frozenset({0, 1}))


def test_weight_degeneracy_joins_levels(dimer_sz0):
    ens = custom_weights(diagonalize(dimer_sz0), [0.4, 0.4, 0.2, 0.0])
    eds = extended_degenerate_structure(ens)
    assert eds.D[0] == frozenset({0, 1})
    assert eds.D[3] == frozenset({3})


@pytest.mark.parametrize("spec, field", [
    ({'kind': 'microcanonical'}, 'ensemble.kind'),
    ({'kind': 'canonical'}, 'ensemble.beta'),
    ({'kind': 'custom'}, 'ensemble.weights'),
    ({'kind': 'canonical', 'beta': 1.0, 'temperature': 2.0}, 'ensemble.temperature'),
])
def test_build_ensemble_errors(dimer_n2_spectrum, spec, field):
    with pytest.raises(ValidationError) as info:
        build_ensemble(dimer_n2_spectrum, spec)
    assert info.value.field == field


def test_build_ensemble_registry(dimer_n2_spectrum):
    ens = build_ensemble(dimer_n2_spectrum, {'kind': 'canonical', 'beta': 2.0})
    assert ens.beta == 2.0
    assert ens.to_dict()['kind'] == 'canonical'

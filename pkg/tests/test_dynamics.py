"""
Tests for pulses, RK4 propagation, the convolution reference and certification.
"""

import csv
from dataclasses import replace

import numpy as np
import pytest

from ensemble_kernel import (CheckFailure, PulseSpec, Sector, UnderResolvedGridError, ValidationError, build_model,
                             canonical_weights, certify_kernel, compute_kernel, convolution_reference, diagonalize,
                             propagate_response, pure_ground_state, relative_l2_difference, site_density_probes)
from ensemble_kernel.dynamics import check_grid, get_available_pulses, required_steps
from ensemble_kernel.probes import custom_probes

LAMBDA = 1e-4


def _two_level_setup(model):
    probes = custom_probes(model.basis, [[[0.0, 1.0], [1.0, 0.0]]], ['X'])
    return probes, pure_ground_state(diagonalize(model))


def _step_response(t, a=1.0, omega=1.0, lam=LAMBDA, v=1.0):
    return -2.0 * a ** 2 * lam * v * (1.0 - np.cos(omega * t)) / omega


# ============================================================================
# Pulses
# ============================================================================

def test_pulse_profiles():
    assert get_available_pulses() == ['sinusoid', 'gaussian', 'step']
    step = PulseSpec('step', params={'onset': 1.0})
    assert step.profile(np.array([0.5, 1.0, 2.0])).tolist() == [0.0, 1.0, 1.0]
    gaussian = PulseSpec('gaussian', params={'center': 2.0, 'width': 0.5})
    assert float(gaussian.profile(2.0)) == pytest.approx(1.0)
    sinusoid = PulseSpec('sinusoid', params={'omega': 2.0})
    assert float(sinusoid.profile(np.pi / 4)) == pytest.approx(1.0)


def test_pulse_grid():
    pulse = PulseSpec(t_end=5.0, n_steps=500)
    assert pulse.times.size == 501
    assert pulse.times[-1] == 5.0
    assert pulse.dt == pytest.approx(0.01)


@pytest.mark.parametrize("kwargs, field", [
    ({'shape': 'square'}, 'pulse.shape'),
    ({'amplitude': 0.0}, 'pulse.amplitude'),
    ({'t_end': -1.0}, 'pulse.t_end'),
    ({'n_steps': 50}, 'pulse.n_steps'),
    ({'shape': 'step', 'params': {'omega': 1.0}}, 'pulse.omega'),
    ({'shape': 'gaussian', 'params': {'width': 0.0}}, 'pulse.width'),
])
def test_invalid_pulses(kwargs, field):
    with pytest.raises(ValidationError) as info:
        PulseSpec(**kwargs)
    assert info.value.field == field


def test_pulse_from_dict():
    pulse = PulseSpec.from_dict({'shape': 'sinusoid', 'amplitude': 1e-3, 'direction': [1, 0], 't_end': 4.0,
                                 'n_steps': 400, 'omega': 3.0})
    assert pulse.params == {'omega': 3.0}
    assert pulse.direction == (1.0, 0.0)


def test_grid_resolution(dimer_n2_spectrum):
    pulse = PulseSpec('step', t_end=100.0, n_steps=100)
    needed = required_steps(dimer_n2_spectrum, pulse)
    # 20 steps per period of E_max - E_min = 2 sqrt(5)
    assert needed == int(np.ceil(20 * 100.0 * 2 * np.sqrt(5.0) / (2 * np.pi)))
    with pytest.raises(UnderResolvedGridError) as info:
        check_grid(dimer_n2_spectrum, pulse)
    assert info.value.required_steps == needed
    assert info.value.to_dict()['field'] == 'pulse.n_steps'


def test_sinusoid_frequency_counts(two_level):
    spectrum = diagonalize(two_level)
    slow = PulseSpec('sinusoid', t_end=100.0, n_steps=400, params={'omega': 0.1})
    fast = PulseSpec('sinusoid', t_end=100.0, n_steps=400, params={'omega': 50.0})
    assert required_steps(spectrum, slow) < required_steps(spectrum, fast)


# ============================================================================
# Propagation against the closed form
# ============================================================================

def test_two_level_step_response(two_level):
    probes, ens = _two_level_setup(two_level)
    pulse = PulseSpec('step', LAMBDA, (1.0,), t_end=10.0, n_steps=2000)
    expected = _step_response(pulse.times)

    trajectory = propagate_response(ens, probes, pulse)
    assert trajectory.metadata['method'] == 'rk4'
    assert trajectory.metadata['max_norm_drift'] < 1e-10
    assert np.allclose(trajectory.delta[:, 0], expected, rtol=0.0, atol=1e-6 * LAMBDA)

    reference = convolution_reference(probes, ens, pulse)
    assert relative_l2_difference(reference, expected[:, None]) < 1e-4
    assert relative_l2_difference(trajectory, reference) < 1e-4


def test_gaussian_pulse_matches_convolution(dimer_n2):
    spectrum = diagonalize(dimer_n2)
    probes = site_density_probes(dimer_n2.basis)
    ens = canonical_weights(spectrum, 1.0)
    pulse = PulseSpec('gaussian', LAMBDA, (1.0, -1.0), t_end=8.0, n_steps=4000, params={'center': 2.0, 'width': 0.5})
    trajectory = propagate_response(ens, probes, pulse, max_workers=2)
    reference = convolution_reference(probes, ens, pulse)
    assert trajectory.max_abs > 1e-3 * LAMBDA
    assert relative_l2_difference(trajectory, reference) < 1e-3


def test_direction_length_is_checked(two_level):
    probes, ens = _two_level_setup(two_level)
    with pytest.raises(ValidationError):
        propagate_response(ens, probes, PulseSpec('step', LAMBDA, (1.0, 0.0), n_steps=2000))


def test_trajectory_csv(tmp_path, two_level):
    probes, ens = _two_level_setup(two_level)
    pulse = PulseSpec('step', LAMBDA, (1.0,), t_end=2.0, n_steps=200)
    path = propagate_response(ens, probes, pulse).to_csv(str(tmp_path / 'out' / 'trajectory.csv'))
    with open(path, newline='') as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['t', 'X']
    assert len(rows) == 202
    assert float(rows[1][0]) == 0.0


def test_relative_l2_difference_shapes():
    assert relative_l2_difference(np.ones((3, 1)), np.ones((3, 1))) == 0.0
    assert relative_l2_difference(np.ones((3, 1)), np.zeros((3, 1))) == pytest.approx(np.sqrt(3.0))
    with pytest.raises(ValidationError):
        relative_l2_difference(np.ones((3, 1)), np.ones((4, 1)))


# ============================================================================
# Certification
# ============================================================================

@pytest.mark.slow
def test_certify_thermal_kernel(dimer_n2, dimer_n2_spectrum):
    probes = site_density_probes(dimer_n2.basis)
    ens = canonical_weights(dimer_n2_spectrum, 1.0)
    report = compute_kernel(probes, ens)
    certification = certify_kernel(report, probes, ens, seed=3)
    assert certification.passed
    kinds = [record['in_kernel'] for record in certification.records]
    assert kinds == [True, False]
    assert certification.to_dict()['passed'] is True


@pytest.mark.slow
def test_certification_failure_raises(dimer_n2, dimer_n2_spectrum):
    probes = site_density_probes(dimer_n2.basis)
    ens = canonical_weights(dimer_n2_spectrum, 1.0)
    report = compute_kernel(probes, ens)
    # Swap in a direction with a non-zero response
    forged = type(report)(report.labels, report.ensemble_kind, report.n_pairs, report.candidate,
                          report.pairwise_residuals, report.commutator_residuals, report.sufficiency_skipped,
                          report.sufficiency_threshold, np.array([[1.0], [-1.0]]) / np.sqrt(2.0), report.commutant,
                          report.angles, report.equals_commutant, report.tolerances)
    result = certify_kernel(forged, probes, ens)
    assert not result.passed
    with pytest.raises(CheckFailure):
        certify_kernel(forged, probes, ens, raise_on_failure=True)


@pytest.mark.slow
def test_chain_propagation_and_certification():
    chain = build_model({'name': 'hubbard_chain', 'sites': 3, 't': 1.0, 'U': 4.0}, Sector(3, 0.5))
    spectrum = diagonalize(chain)
    probes = site_density_probes(chain.basis)
    ens = canonical_weights(spectrum, 1.0)
    pulse = PulseSpec('gaussian', LAMBDA, (1.0, 0.0, -1.0), t_end=10.0, params={'center': 2.0, 'width': 0.5})
    pulse = replace(pulse, n_steps=max(pulse.n_steps, required_steps(spectrum, pulse)))
    trajectory = propagate_response(ens, probes, pulse, max_workers=2)
    reference = convolution_reference(probes, ens, pulse)
    assert trajectory.max_abs > 1e-3 * LAMBDA
    assert relative_l2_difference(trajectory, reference) <= 1e-3

    report = compute_kernel(probes, ens)
    assert report.kernel_dim == 1
    certification = certify_kernel(report, probes, ens, seed=7)
    assert certification.passed
    assert [record['in_kernel'] for record in certification.records] == [True, False]

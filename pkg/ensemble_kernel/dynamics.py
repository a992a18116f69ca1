#!/usr/bin/env python3
"""
Response Dynamics

Time-domain verification of linear responses. Every ensemble member is
propagated under H0 + lambda f(t) L_v and the change of the probe expectations
is compared with the Lehmann convolution and with zero for kernel directions.

Features:
- Pulse shapes: sinusoid, gaussian, step (PULSE_SHAPES registry)
- Fixed-step RK4 in the interaction picture of H0, one worker per member
- Trapezoidal convolution of chi with the pulse
- Kernel certification with a seeded non-kernel control direction
- Atomic CSV export of trajectories
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

try:
    from .ensemble import Ensemble
    from .exceptions import CheckFailure, UnderResolvedGridError, ValidationError
    from .probes import ProbeSet
    from .response_kernel import KernelReport, TransitionMoments, chi_direction, transition_moments
    from .settings import DEFAULT_LAMBDA, MIN_STEPS_PER_PERIOD
    from .spectrum import SpectralDecomposition
    from .util import as_number, atomic_write_text
except ImportError:
    from ensemble import Ensemble
    from exceptions import CheckFailure, UnderResolvedGridError, ValidationError
    from probes import ProbeSet
    from response_kernel import KernelReport, TransitionMoments, chi_direction, transition_moments
    from settings import DEFAULT_LAMBDA, MIN_STEPS_PER_PERIOD
    from spectrum import SpectralDecomposition
    from util import as_number, atomic_write_text

logger = logging.getLogger(__name__)

MIN_STEPS = 100
NORM_WARNING = 1e-12
# Certification thresholds, relative to lambda * max_i ||Q_i||
KERNEL_RESPONSE_TOL = 1e-6
CONTROL_RESPONSE_MIN = 1e-2


# ============================================================================
# Pulses
# ============================================================================

def _sinusoid(t: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    return np.sin(params.get('omega', 1.0) * t + params.get('phase', 0.0))


def _gaussian(t: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    center = params.get('center', 0.0)
    width = params.get('width', 1.0)
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def _step(t: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    return np.where(t >= params.get('onset', 0.0), 1.0, 0.0)


# Pulse registry
# Format: shape -> (profile f(t, params), allowed parameters, description)
PULSE_SHAPES: Dict[str, Tuple[Callable[[np.ndarray, Mapping[str, float]], np.ndarray], Tuple[str, ...], str]] = {
    'sinusoid': (_sinusoid, ('omega', 'phase'), 'sin(omega t + phase)'),
    'gaussian': (_gaussian, ('center', 'width'), 'exp(-(t - center)^2 / 2 width^2)'),
    'step': (_step, ('onset',), 'Switched on at onset and kept on'),
}


def get_available_pulses() -> List[str]:
    return list(PULSE_SHAPES.keys())


@dataclass(frozen=True)
class PulseSpec:
    """
    Separable perturbation lambda * f(t) * sum_j v_j Q_j on a uniform grid.

    Attributes:
        shape: Key of PULSE_SHAPES
        amplitude: lambda, non-zero
        direction: Probe-coefficient vector v
        t_end: Final time, > 0
        n_steps: Number of steps, >= 100
        params: Shape parameters (omega, phase, center, width, onset)
    """

    shape: str = 'step'
    amplitude: float = DEFAULT_LAMBDA
    direction: Tuple[float, ...] = ()
    t_end: float = 10.0
    n_steps: int = 4000
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.shape, str) or self.shape not in PULSE_SHAPES:
            raise ValidationError(f"Unknown pulse shape '{self.shape}'. Available: {get_available_pulses()}",
                                  field='pulse.shape')
        if not isinstance(self.amplitude, (int, float)) or isinstance(self.amplitude, bool) or self.amplitude == 0:
            raise ValidationError("Pulse amplitude lambda must be a non-zero number", field='pulse.amplitude')
        if isinstance(self.t_end, (bool, str)) or not isinstance(self.t_end, (int, float)) or not self.t_end > 0:
            raise ValidationError(f"t_end must be a positive number, got {self.t_end!r}", field='pulse.t_end')
        if isinstance(self.n_steps, bool) or not isinstance(self.n_steps, int) or self.n_steps < MIN_STEPS:
            raise ValidationError(f"n_steps must be an integer >= {MIN_STEPS}, got {self.n_steps!r}",
                                  field='pulse.n_steps')
        _, allowed, _ = PULSE_SHAPES[self.shape]
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise ValidationError(f"Unknown parameter(s) {unknown} for pulse '{self.shape}'; allowed: {list(allowed)}",
                                  field=f'pulse.{unknown[0]}')
        if self.shape == 'gaussian' and not self.params.get('width', 1.0) > 0:
            raise ValidationError("Gaussian width must be positive", field='pulse.width')
        if isinstance(self.direction, (str, bytes)) or not hasattr(self.direction, '__iter__'):
            raise ValidationError(f"Pulse direction must be a list of numbers, got {self.direction!r}",
                                  field='pulse.direction')
        object.__setattr__(self, 'direction', tuple(as_number(x, 'pulse.direction') for x in self.direction))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def profile(self, t: Union[float, np.ndarray]) -> np.ndarray:
        function, _, _ = PULSE_SHAPES[self.shape]
        return function(np.asarray(t, dtype=float), self.params)

    def with_direction(self, v: Sequence[float]) -> 'PulseSpec':
        return replace(self, direction=tuple(float(x) for x in v))

    def to_dict(self) -> Dict[str, Any]:
        return {'shape': self.shape, 'amplitude': self.amplitude, 'direction': list(self.direction),
                't_end': self.t_end, 'n_steps': self.n_steps, 'params': dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'PulseSpec':
        """Parse {"shape", "amplitude", "direction", "t_end", "n_steps", shape parameters...}."""
        core = {'shape', 'amplitude', 'direction', 't_end', 'n_steps'}
        params = {key: as_number(value, f'pulse.{key}') for key, value in data.items() if key not in core}
        kwargs = {key: data[key] for key in core if key in data}
        return cls(params=params, **kwargs)


def required_steps(spectrum: SpectralDecomposition, pulse: PulseSpec) -> int:
    """Smallest n_steps giving MIN_STEPS_PER_PERIOD steps over the fastest frequency."""
    fastest = float(spectrum.energies[-1] - spectrum.energies[0]) if spectrum.dim else 0.0
    if pulse.shape == 'sinusoid':
        fastest = max(fastest, abs(pulse.params.get('omega', 1.0)))
    if fastest <= 0:
        return MIN_STEPS
    return max(MIN_STEPS, int(math.ceil(MIN_STEPS_PER_PERIOD * pulse.t_end * fastest / (2.0 * math.pi))))


def check_grid(spectrum: SpectralDecomposition, pulse: PulseSpec):
    """
    Raises:
        UnderResolvedGridError: Fewer than MIN_STEPS_PER_PERIOD steps per period
    """
    needed = required_steps(spectrum, pulse)
    if pulse.n_steps < needed:
        raise UnderResolvedGridError(needed, f"Grid of {pulse.n_steps} steps over t_end={pulse.t_end:g} is "
                                             f"under-resolved; at least {needed} steps are required")


# ============================================================================
# Trajectories
# ============================================================================

@dataclass(frozen=True, eq=False)
class ResponseTrajectory:
    """
    delta[n, i]: change of <Q_i> at times[n].

    Attributes:
        times: Uniform grid starting at 0
        delta: (T, n_probes) real responses
        labels: Probe labels
        metadata: lambda, pulse, method and diagnostics
    """

    times: np.ndarray
    delta: np.ndarray
    labels: Tuple[str, ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.delta))) if self.delta.size else 0.0

    def to_csv(self, path: str) -> str:
        """Write 't,<labels...>' and one row per time with 15 significant digits."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['t', *self.labels])
        for t, row in zip(self.times, self.delta):
            writer.writerow([f"{t:.15g}", *(f"{x:.15g}" for x in row)])
        return atomic_write_text(path, buffer.getvalue())


def relative_l2_difference(a: Union[ResponseTrajectory, np.ndarray],
                           b: Union[ResponseTrajectory, np.ndarray]) -> float:
    """||a - b|| / ||b|| over the whole grid (absolute when b vanishes)."""
    a = a.delta if isinstance(a, ResponseTrajectory) else np.asarray(a, dtype=float)
    b = b.delta if isinstance(b, ResponseTrajectory) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"Trajectory shapes differ: {a.shape} vs {b.shape}", field='trajectory')
    reference = float(np.linalg.norm(b))
    difference = float(np.linalg.norm(a - b))
    return difference / reference if reference > 0 else difference


def _propagate_member(k: int, energies: np.ndarray, coupling: np.ndarray, q: np.ndarray,
                      pulse: PulseSpec) -> Tuple[np.ndarray, float]:
    """RK4 for dc/dt = -i lambda f(t) (P(t) o l) c from c(0) = e_k; returns <Q_i>(t) and the norm drift."""
    lam = pulse.amplitude
    dt = pulse.dt
    times = pulse.times

    def rhs(t: float, c: np.ndarray) -> np.ndarray:
        strength = lam * float(pulse.profile(t))
        if strength == 0.0:
            return np.zeros_like(c)
        phase = np.exp(1j * energies * t)
        return -1j * strength * (phase * (coupling @ (phase.conj() * c)))

    def observe(t: float, c: np.ndarray) -> np.ndarray:
        d = np.exp(-1j * energies * t) * c
        return np.real(np.einsum('k,ikl,l->i', d.conj(), q, d))

    c = np.zeros(energies.size, dtype=complex)
    c[k] = 1.0
    values = np.empty((times.size, q.shape[0]))
    values[0] = observe(0.0, c)
    drift = 0.0
    for n in range(times.size - 1):
        t = times[n]
        k1 = rhs(t, c)
        k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)
        k4 = rhs(t + dt, c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[n + 1] = observe(times[n + 1], c)
        drift = max(drift, abs(float(np.vdot(c, c).real) - 1.0))
    return values, drift


def propagate_response(ens: Ensemble, probes: ProbeSet, pulse: PulseSpec,
                       moments: Optional[TransitionMoments] = None,
                       max_workers: Optional[int] = None) -> ResponseTrajectory:
    """
    First-order response by explicit propagation of every weighted member.

    Each member Psi_K is evolved under H0 + lambda f(t) L_v in the interaction
    picture of H0 (exact phases from the spectrum, RK4 on the perturbation);
    delta Q_i(t) = sum_K w_K (<Psi_K(t)| Q_i |Psi_K(t)> - <Psi_K| Q_i |Psi_K>).

    Args:
        ens: Ensemble of the unperturbed generator H0
        probes: Probe set (defines both L_v and the observed Q_i)
        pulse: Pulse with a direction of len(probes) coefficients
        max_workers: Thread count for the member propagations

    Returns:
        ResponseTrajectory with metadata method 'rk4'

    Raises:
        ValidationError: Direction length mismatch
        UnderResolvedGridError: Too few steps per period of the fastest frequency

    Example:
        pulse = PulseSpec('step', 1e-4, kernel_vector, t_end=10.0, n_steps=4000)
        propagate_response(ens, probes, pulse).max_abs / 1e-4  # ~0 for kernel vectors
    """
    if len(pulse.direction) != len(probes):
        raise ValidationError(f"Pulse direction has {len(pulse.direction)} entries for {len(probes)} probes",
                              field='pulse.direction')
    spectrum = ens.spectrum
    check_grid(spectrum, pulse)
    moments = moments or transition_moments(probes, spectrum)
    coupling = moments.direction(pulse.direction)
    energies = np.asarray(spectrum.energies, dtype=float)
    members = ens.members

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(_propagate_member, int(k), energies, coupling, moments.q, pulse) for k in members]
        results = [future.result() for future in futures]

    delta = np.zeros((pulse.n_steps + 1, len(probes)))
    drift = 0.0
    for k, (values, member_drift) in zip(members, results):
        delta += ens.weights[k] * (values - np.real(np.diagonal(moments.q, axis1=1, axis2=2))[:, k][None, :])
        drift = max(drift, member_drift)
    if drift > NORM_WARNING:
        logger.warning(f"State norm drifted by {drift:.3e} during propagation")
    logger.debug(f"Propagated {members.size} members over {pulse.n_steps} steps, norm drift {drift:.2e}")
    return ResponseTrajectory(pulse.times, delta, probes.labels,
                              {'method': 'rk4', 'lambda': pulse.amplitude, 'pulse': pulse.to_dict(),
                               'members': int(members.size), 'max_norm_drift': drift})


def convolution_reference(probes: ProbeSet, ens: Ensemble, pulse: PulseSpec,
                          moments: Optional[TransitionMoments] = None) -> ResponseTrajectory:
    """
    delta Q_i(t) = lambda * int_0^t chi_iv(t - t') f(t') dt' by the trapezoidal rule.

    chi_iv = sum_j chi_ij v_j comes from the Lehmann sum on the same grid.
    """
    if len(pulse.direction) != len(probes):
        raise ValidationError(f"Pulse direction has {len(pulse.direction)} entries for {len(probes)} probes",
                              field='pulse.direction')
    moments = moments or transition_moments(probes, ens.spectrum)
    times = pulse.times
    kernel = chi_direction(moments, ens, pulse.direction, times)
    f = pulse.profile(times)
    size = times.size
    delta = np.zeros((size, len(probes)))
    for i in range(len(probes)):
        g = kernel[:, i]
        full = np.convolve(g, f)[:size]
        # Trapezoid: half weight on both ends of every partial integral
        delta[:, i] = pulse.dt * (full - 0.5 * g * f[0] - 0.5 * g[0] * f)
    delta *= pulse.amplitude
    return ResponseTrajectory(times, delta, probes.labels,
                              {'method': 'lehmann_convolution', 'lambda': pulse.amplitude, 'pulse': pulse.to_dict()})


# ============================================================================
# Kernel certification
# ============================================================================

@dataclass(frozen=True)
class Certification:
    """Zero-response test of kernel vectors plus one control direction outside the kernel."""

    records: Tuple[Dict[str, Any], ...]
    scale: float
    amplitude: float

    @property
    def passed(self) -> bool:
        return all(record['passed'] for record in self.records)

    def to_dict(self) -> Dict[str, Any]:
        return {'passed': self.passed, 'scale': self.scale, 'lambda': self.amplitude,
                'vectors': [dict(record) for record in self.records]}


def certify_kernel(report: KernelReport, probes: ProbeSet, ens: Ensemble, pulse: Optional[PulseSpec] = None,
                   seed: int = 0, raise_on_failure: bool = False,
                   max_workers: Optional[int] = None) -> Certification:
    """
    Propagate every kernel vector and one seeded random non-kernel vector.

    Kernel vectors pass when max_t |delta Q| / lambda <= 1e-6 * scale; the
    control passes when its response reaches 1e-2 * scale, scale = max_i ||Q_i||.

    Args:
        report: Kernel report of (probes, ens)
        pulse: Grid and shape template; its direction is replaced (default: step,
            lambda 1e-4, t_end 10 on the smallest adequate grid)
        seed: Seed of the control direction
        raise_on_failure: Raise CheckFailure instead of returning a failed result

    Returns:
        Certification
    """
    if pulse is None:
        template = PulseSpec('step', DEFAULT_LAMBDA, (), 10.0, MIN_STEPS)
        pulse = replace(template, n_steps=max(1000, 2 * required_steps(ens.spectrum, template)))
    moments = transition_moments(probes, ens.spectrum)
    scale = probes.scale
    lam = abs(pulse.amplitude)
    records: List[Dict[str, Any]] = []

    basis = report.kernel_basis
    for m in range(basis.shape[1]):
        trajectory = propagate_response(ens, probes, pulse.with_direction(basis[:, m]), moments, max_workers)
        response = trajectory.max_abs / lam
        records.append({'vector': f'kernel[{m}]', 'in_kernel': True, 'max_response': response,
                        'threshold': KERNEL_RESPONSE_TOL * scale,
                        'passed': response <= KERNEL_RESPONSE_TOL * scale})

    rng = np.random.default_rng(seed)
    control = rng.standard_normal(len(probes))
    if basis.size:
        control -= basis @ (basis.T @ control)
    norm = float(np.linalg.norm(control))
    if norm > 1e-8:
        control /= norm
        trajectory = propagate_response(ens, probes, pulse.with_direction(control), moments, max_workers)
        response = trajectory.max_abs / lam
        records.append({'vector': 'control', 'in_kernel': False, 'max_response': response,
                        'threshold': CONTROL_RESPONSE_MIN * scale,
                        'passed': response >= CONTROL_RESPONSE_MIN * scale,
                        'coefficients': [float(x) for x in control]})
    else:
        logger.info("Kernel spans every probe direction; no control vector")

    certification = Certification(tuple(records), scale, pulse.amplitude)
    logger.info(f"Dynamics certification {'passed' if certification.passed else 'FAILED'} "
                f"({len(records)} vectors)")
    if raise_on_failure and not certification.passed:
        failed = [record['vector'] for record in records if not record['passed']]
        raise CheckFailure(f"Dynamics certification failed for {failed}", certification.to_dict())
    return certification

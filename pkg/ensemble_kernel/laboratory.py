#!/usr/bin/env python3
"""
Response Laboratory

One object per experiment. It owns the model, its spectrum, the ensemble and
the probes (all built lazily on first access) and runs the analyses:
- spectrum:   energies and degeneracy groups
- kernel:     response kernel with commutant comparison
- verify:     kernel plus dynamics certification
- propagate:  RK4 trajectory against the Lehmann convolution
- sweep_beta: kernel dimension as a function of beta
- static:     kernel of the static thermal response

Every analysis is timed; get_timings() returns the table.

Usage:
    lab = ResponseLab({'name': 'hubbard_chain', 'sites': 2, 'U': 2.0},
                      sector={'N': 2},
                      ensemble={'kind': 'canonical', 'beta': 1.0},
                      probes='one_body_full')
    report = lab.run_kernel()
    print(report.kernel_dim, report.commutant_dim)
"""

import logging
import time
from contextlib import contextmanager
from functools import cached_property
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

try:
    from .dynamics import Certification, PulseSpec, ResponseTrajectory, certify_kernel, convolution_reference
    from .dynamics import propagate_response, relative_l2_difference
    from .ensemble import Ensemble, build_ensemble
    from .exceptions import ValidationError
    from .fock_space import ManyBodyOperator, Sector, build_model
    from .probes import ProbeSet, build_probes
    from .response_kernel import KernelOptions, KernelReport, compute_kernel, kernel_dimension_sweep, static_kernel
    from .settings import Tolerances
    from .spectrum import SpectralDecomposition, diagonalize, spectrum_summary
except ImportError:
    from dynamics import Certification, PulseSpec, ResponseTrajectory, certify_kernel, convolution_reference
    from dynamics import propagate_response, relative_l2_difference
    from ensemble import Ensemble, build_ensemble
    from exceptions import ValidationError
    from fock_space import ManyBodyOperator, Sector, build_model
    from probes import ProbeSet, build_probes
    from response_kernel import KernelOptions, KernelReport, compute_kernel, kernel_dimension_sweep, static_kernel
    from settings import Tolerances
    from spectrum import SpectralDecomposition, diagonalize, spectrum_summary

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_BETAS = (0.5, 1.0, 2.0, 5.0)


class ResponseLab:
    """
    Unified driver for one experiment.

    Attributes:
        model_spec: Model JSON fragment
        sector: Sector of the Hilbert space
        ensemble_spec: Ensemble JSON fragment
        probe_spec: Probe kind or {"custom": [...]}
        tolerances: Numerical thresholds
        seed: Seed of randomized checks
    """

    def __init__(self, model: Mapping[str, Any], sector: Optional[Union[Sector, Mapping[str, Any]]] = None,
                 ensemble: Optional[Mapping[str, Any]] = None,
                 probes: Union[str, Mapping[str, Any]] = 'site_density',
                 tolerances: Optional[Tolerances] = None, seed: int = 0, max_workers: Optional[int] = None):
        """
        Initialize the experiment; nothing is computed yet.

        Args:
            model: Model spec, e.g. {"name": "hubbard_chain", "sites": 2, "U": 2.0}
            sector: Sector object or {"N": ..., "Sz": ...} (default: model's own, else full Fock)
            ensemble: Ensemble spec (default: {"kind": "pure"})
            probes: Probe spec (default: site_density)
            tolerances: Tolerances (default: Tolerances())
            seed: Seed of the control direction in verify
            max_workers: Threads for member propagation
        """
        self.model_spec = dict(model)
        if sector is None:
            sector = Sector.from_dict(self.model_spec.get('sector'))
        elif not isinstance(sector, Sector):
            sector = Sector.from_dict(sector)
        self.sector = sector
        self.ensemble_spec = dict(ensemble or {'kind': 'pure'})
        self.probe_spec = probes
        self.tolerances = tolerances or Tolerances()
        self.seed = int(seed)
        self.max_workers = max_workers

        self.timings: Dict[str, float] = {}
        # Extra report sections keyed like the JSON report
        self.sections: Dict[str, Any] = {}
        self._kernel_report: Optional[KernelReport] = None
        self._certification: Optional[Certification] = None

    # ========================================================================
    # Lazily built pieces
    # ========================================================================

    @contextmanager
    def _timed(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    @cached_property
    def hamiltonian(self) -> ManyBodyOperator:
        with self._timed('model'):
            return build_model(self.model_spec, self.sector)

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        """Spectrum of the bare Hamiltonian."""
        with self._timed('diagonalize'):
            return diagonalize(self.hamiltonian, self.tolerances.tol_E)

    @cached_property
    def ensemble(self) -> Ensemble:
        """Ensemble; grand canonical kinds carry the spectrum of H - mu N."""
        with self._timed('ensemble'):
            return build_ensemble(self.spectrum, self.ensemble_spec, self.tolerances.tol_w)

    @cached_property
    def probes(self) -> ProbeSet:
        with self._timed('probes'):
            return build_probes(self.hamiltonian.basis, self.probe_spec)

    # ========================================================================
    # Analyses
    # ========================================================================

    def run_spectrum(self) -> Dict[str, Any]:
        summary = spectrum_summary(self.spectrum)
        summary['basis'] = {'orbitals': self.hamiltonian.basis.n_orbitals, 'sector': self.sector.to_dict(),
                            'dim': self.hamiltonian.basis.dim}
        return summary

    def run_kernel(self, assert_commutant: bool = True) -> KernelReport:
        """
        Compute (once) the kernel report of the experiment.

        Raises:
            MonotonicityError: Non-monotone ensemble
            CheckFailure: Thermal kernel differs from the commutant
        """
        if self._kernel_report is None:
            probes, ens = self.probes, self.ensemble
            with self._timed('kernel'):
                options = KernelOptions(self.tolerances, assert_commutant=assert_commutant)
                self._kernel_report = compute_kernel(probes, ens, options)
        return self._kernel_report

    def run_verify(self, pulse: Optional[PulseSpec] = None, raise_on_failure: bool = True) -> Certification:
        """Kernel plus dynamics certification of every kernel vector and one control vector."""
        report = self.run_kernel()
        with self._timed('certification'):
            self._certification = certify_kernel(report, self.probes, self.ensemble, pulse, seed=self.seed,
                                                 raise_on_failure=raise_on_failure, max_workers=self.max_workers)
        return self._certification

    def run_propagate(self, pulse: PulseSpec) -> Tuple[ResponseTrajectory, ResponseTrajectory, float]:
        """
        Propagated trajectory, its Lehmann convolution reference and their relative L2 difference.
        """
        probes, ens = self.probes, self.ensemble
        with self._timed('propagate'):
            trajectory = propagate_response(ens, probes, pulse, max_workers=self.max_workers)
        with self._timed('convolution'):
            reference = convolution_reference(probes, ens, pulse)
        difference = relative_l2_difference(trajectory, reference)
        self.sections['propagation'] = {'relative_l2_difference': difference, 'max_abs_response': trajectory.max_abs,
                                       'max_norm_drift': trajectory.metadata['max_norm_drift'],
                                       'pulse': pulse.to_dict()}
        logger.info(f"Propagation vs convolution: relative L2 difference {difference:.3e}")
        return trajectory, reference, difference

    def run_sweep(self, betas: Sequence[float] = DEFAULT_SWEEP_BETAS) -> List[Dict[str, Any]]:
        """Kernel dimension per beta (grand canonical when the ensemble spec is)."""
        mu = None
        if self.ensemble_spec.get('kind') == 'grand_canonical':
            mu = self.ensemble_spec.get('mu')
        elif self.ensemble_spec.get('kind') not in (None, 'canonical'):
            logger.info(f"Sweep uses canonical ensembles; ensemble kind "
                        f"'{self.ensemble_spec.get('kind')}' is ignored")
        probes = self.probes
        with self._timed('sweep'):
            rows = kernel_dimension_sweep(self.hamiltonian, probes, list(betas), self.tolerances, mu=mu,
                                          spectrum=self.spectrum)
        self.sections['sweep_beta'] = rows
        return rows

    def run_static(self) -> Dict[str, Any]:
        """
        Static thermal kernel next to the dynamic one.

        Raises:
            ValidationError: The ensemble is not canonical or grand canonical
        """
        ens = self.ensemble
        if not ens.energy_only:
            raise ValidationError("Static thermal response needs a canonical or grand canonical ensemble",
                                  field='ensemble.kind')
        with self._timed('static'):
            result = static_kernel(self.hamiltonian, self.probes, ens.kind, ens.beta, ens.mu, self.tolerances)
        dynamic = self.run_kernel()
        self.sections['static_response'] = {
            'static_kernel_dim': result.dim,
            'static_kernel_basis': [[float(x) for x in column] for column in result.basis.T],
            'singular_values': [float(s) for s in result.singular_values],
            'threshold': result.threshold,
            'dynamic_kernel_dim': dynamic.kernel_dim,
        }
        return self.sections['static_response']

    # ========================================================================
    # Results
    # ========================================================================

    def report(self, include_timings: bool = False) -> Dict[str, Any]:
        """
        Sections computed so far, keyed like the JSON report.

        Args:
            include_timings: Fill 'timings' with the stage durations; by default
                it is null so that repeated runs give identical reports
        """
        sections = {
            'spectrum': self.run_spectrum(),
            'ensemble': self.ensemble.to_dict() if 'ensemble' in self.__dict__ else None,
            'kernel_report': self._kernel_report.to_dict() if self._kernel_report is not None else None,
            'dynamics_certification': self._certification.to_dict() if self._certification is not None else None,
            'timings': self.get_timings() if include_timings else None,
        }
        sections.update(self.sections)
        return sections

    def get_timings(self) -> Dict[str, float]:
        """Seconds spent per stage."""
        return dict(self.timings)

    def reset_timings(self):
        self.timings = {}

    def __repr__(self) -> str:
        return (f"ResponseLab(model='{self.model_spec.get('name')}', sector={self.sector.to_dict() or 'full'}, "
                f"ensemble='{self.ensemble_spec.get('kind')}')")


def main():
    """
    Example usage: the finite-temperature kernel of the Hubbard dimer.
    """
    lab = ResponseLab({'name': 'hubbard_chain', 'sites': 2, 't': 1.0, 'U': 2.0}, sector={'N': 2},
                      ensemble={'kind': 'canonical', 'beta': 1.0}, probes='one_body_full')
    report = lab.run_kernel()
    print(f"kernel_dim={report.kernel_dim} commutant_dim={report.commutant_dim} "
          f"max_angle={report.max_principal_angle:.2e}")
    for row in lab.run_sweep():
        print(f"  beta={row['beta']:<4g} kernel_dim={row['kernel_dim']}")
    print(f"Timings: {lab.get_timings()}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
Ensemble Kernel Command Line

Reads a JSON experiment file, runs one analysis and writes a JSON report
(plus a CSV trajectory for `propagate`).

Usage:
    ensemble-kernel kernel --spec experiments/dimer_canonical.json --out results/
    ensemble-kernel sweep-beta --spec experiments/dimer_canonical.json
    ensemble-kernel --spec experiments/chain_verify.json --set tol_rank=1e-11
    ensemble-kernel kernel --spec experiments/dimer_canonical.json --timings

Exit codes:
    0  success
    2  invalid input (schema, monotonicity, under-resolved grid, unreadable file)
    3  a verified property failed (thermal kernel != commutant, dynamics certification)
    1  any other package error

Errors are printed to stderr as one JSON object. Reports differ between runs
only in their timestamp unless --timings adds stage durations.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

try:
    from .dynamics import PulseSpec
    from .exceptions import CheckFailure, KernelLabError, ValidationError
    from .fock_space import Sector
    from .laboratory import DEFAULT_SWEEP_BETAS, ResponseLab
    from .settings import Tolerances
    from .util import as_number, atomic_write_text, parse_overrides
except ImportError:
    from dynamics import PulseSpec
    from exceptions import CheckFailure, KernelLabError, ValidationError
    from fock_space import Sector
    from laboratory import DEFAULT_SWEEP_BETAS, ResponseLab
    from settings import Tolerances
    from util import as_number, atomic_write_text, parse_overrides

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3

SPEC_KEYS = ('model', 'sector', 'ensemble', 'probes', 'analysis', 'tolerances', 'output', 'pulse', 'seed')
OUTPUT_KEYS = ('dir', 'report', 'trajectory')
DEFAULT_REPORT = 'report.json'
DEFAULT_TRAJECTORY = 'trajectory.csv'


# ============================================================================
# Experiment spec
# ============================================================================

@dataclass
class ExperimentSpec:
    """
    Validated experiment file.

    Attributes:
        model: Model fragment (must contain "name")
        sector: Sector
        ensemble: Ensemble fragment
        probes: Probe kind or custom fragment
        analysis: Analysis name (key of ANALYSIS_TYPES)
        betas: Betas of sweep_beta
        tolerances: Tolerances
        output: Output paths {"dir", "report", "trajectory"}
        pulse: Pulse fragment for verify / propagate
        seed: Seed of randomized checks
    """

    model: Dict[str, Any]
    sector: Sector = field(default_factory=Sector)
    ensemble: Dict[str, Any] = field(default_factory=lambda: {'kind': 'pure'})
    probes: Union[str, Dict[str, Any]] = 'site_density'
    analysis: str = 'kernel'
    betas: Tuple[float, ...] = DEFAULT_SWEEP_BETAS
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: Dict[str, str] = field(default_factory=dict)
    pulse: Optional[Dict[str, Any]] = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Any) -> 'ExperimentSpec':
        """
        Validate an experiment object.

        Raises:
            ValidationError: Unknown key, wrong type or unknown analysis (field names the key)
        """
        if not isinstance(data, Mapping):
            raise ValidationError("Experiment spec must be a JSON object", field='spec')
        unknown = sorted(set(data) - set(SPEC_KEYS))
        if unknown:
            raise ValidationError(f"Unknown experiment key(s) {unknown}; allowed: {list(SPEC_KEYS)}",
                                  field=unknown[0])
        if not isinstance(data.get('model'), Mapping):
            raise ValidationError("'model' object is required", field='model')
        model = dict(data['model'])
        if 'sector' in data and 'sector' in model:
            raise ValidationError("Give the sector either at top level or inside 'model'", field='sector')
        sector = Sector.from_dict(data.get('sector', model.pop('sector', None)))

        ensemble = data.get('ensemble', {'kind': 'pure'})
        if not isinstance(ensemble, Mapping):
            raise ValidationError("'ensemble' must be an object", field='ensemble')
        probes = data.get('probes', 'site_density')
        if not isinstance(probes, (str, Mapping)):
            raise ValidationError("'probes' must be a kind name or an object", field='probes')

        analysis, betas = _parse_analysis(data.get('analysis', 'kernel'))
        tolerances = data.get('tolerances', {})
        if not isinstance(tolerances, Mapping):
            raise ValidationError("'tolerances' must be an object", field='tolerances')
        output = data.get('output', {})
        if not isinstance(output, Mapping):
            raise ValidationError("'output' must be an object", field='output')
        unknown = sorted(set(output) - set(OUTPUT_KEYS))
        if unknown:
            raise ValidationError(f"Unknown output key(s) {unknown}; allowed: {list(OUTPUT_KEYS)}",
                                  field=f'output.{unknown[0]}')
        pulse = data.get('pulse')
        if pulse is not None and not isinstance(pulse, Mapping):
            raise ValidationError("'pulse' must be an object", field='pulse')
        seed = data.get('seed', 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ValidationError(f"'seed' must be an integer, got {seed!r}", field='seed')

        return cls(model, sector, dict(ensemble), probes if isinstance(probes, str) else dict(probes),
                   analysis, betas, Tolerances.from_dict(tolerances), {k: str(v) for k, v in output.items()},
                   dict(pulse) if pulse is not None else None, seed)

    def pulse_spec(self, required: bool = False) -> Optional[PulseSpec]:
        if self.pulse is None:
            if required:
                raise ValidationError("This analysis needs a 'pulse' object", field='pulse')
            return None
        return PulseSpec.from_dict(self.pulse)


def _parse_analysis(value: Any) -> Tuple[str, Tuple[float, ...]]:
    betas = DEFAULT_SWEEP_BETAS
    if isinstance(value, Mapping):
        if len(value) != 1:
            raise ValidationError("'analysis' object must have exactly one key", field='analysis')
        name, argument = next(iter(value.items()))
        if not isinstance(argument, list) or not argument:
            raise ValidationError(f"'{name}' needs a non-empty list of betas", field=f'analysis.{name}')
        betas = tuple(as_number(beta, f'analysis.{name}') for beta in argument)
    elif isinstance(value, str):
        name = value
    else:
        raise ValidationError("'analysis' must be a name or an object", field='analysis')
    name = name.replace('-', '_')
    if name not in ANALYSIS_TYPES:
        raise ValidationError(f"Unknown analysis '{name}'. Available: {get_available_analyses()}",
                              field='analysis')
    return name, betas


# ============================================================================
# Analyses
# ============================================================================

def _analysis_spectrum(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    spectrum = lab.run_spectrum()
    lines = [f"{'level':>5}  {'energy':>20}  {'degeneracy':>10}"]
    for k, level in enumerate(spectrum['levels']):
        lines.append(f"{k:>5}  {level['energy']:>20.12f}  {level['degeneracy']:>10}")
    return lines


def _kernel_lines(lab: ResponseLab) -> List[str]:
    report = lab.run_kernel()
    return [
        f"candidate_dim        {report.candidate_dim}",
        f"kernel_dim           {report.kernel_dim}",
        f"commutant_dim        {report.commutant_dim}",
        f"excess_dimension     {report.excess_dimension}",
        f"max_principal_angle  {report.max_principal_angle:.3e}",
        f"singular_value_gap   {report.candidate.gap:.3e}",
        f"pairs                {report.n_pairs}",
    ]


def _analysis_kernel(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    return _kernel_lines(lab)


def _analysis_verify(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    lines = _kernel_lines(lab)
    certification = lab.run_verify(spec.pulse_spec(), raise_on_failure=True)
    lines.append(f"{'vector':<12} {'max_response':>14} {'threshold':>12}  result")
    for record in certification.records:
        lines.append(f"{record['vector']:<12} {record['max_response']:>14.3e} {record['threshold']:>12.3e}  "
                     f"{'pass' if record['passed'] else 'FAIL'}")
    return lines


def _analysis_propagate(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    pulse = spec.pulse_spec(required=True)
    trajectory, _, difference = lab.run_propagate(pulse)
    path = os.path.join(out_dir, spec.output.get('trajectory', DEFAULT_TRAJECTORY))
    trajectory.to_csv(path)
    lab.sections['propagation']['trajectory'] = path
    return [f"trajectory           {path}", f"relative_l2_vs_chi   {difference:.3e}"]


def _analysis_sweep(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    rows = lab.run_sweep(spec.betas)
    lines = [f"{'beta':>8}  {'kernel_dim':>10}  {'commutant_dim':>13}"]
    for row in rows:
        lines.append(f"{row['beta']:>8g}  {row['kernel_dim']:>10}  {row['commutant_dim']:>13}")
    return lines


def _analysis_static(lab: ResponseLab, spec: ExperimentSpec, out_dir: str) -> List[str]:
    result = lab.run_static()
    return [f"static_kernel_dim    {result['static_kernel_dim']}",
            f"dynamic_kernel_dim   {result['dynamic_kernel_dim']}"]


# Analysis registry
# Format: name -> (runner, description); runners return table lines
ANALYSIS_TYPES: Dict[str, Tuple[Callable[[ResponseLab, ExperimentSpec, str], List[str]], str]] = {
    'spectrum': (_analysis_spectrum, 'Energies and degeneracy groups'),
    'kernel': (_analysis_kernel, 'Response kernel with commutant comparison'),
    'verify': (_analysis_verify, 'Kernel plus dynamics certification'),
    'propagate': (_analysis_propagate, 'RK4 trajectory vs Lehmann convolution, CSV export'),
    'sweep_beta': (_analysis_sweep, 'Kernel dimension vs beta'),
    'static': (_analysis_static, 'Kernel of the static thermal response'),
}

COMMANDS = ('spectrum', 'kernel', 'verify', 'propagate', 'sweep-beta', 'static')


def get_available_analyses() -> List[str]:
    return list(ANALYSIS_TYPES.keys())


# ============================================================================
# Entry point
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ensemble-kernel',
                                     description='Response-kernel laboratory for finite fermion ensembles')
    parser.add_argument('command', nargs='?', choices=COMMANDS,
                        help="Analysis to run (default: the experiment file's 'analysis')")
    parser.add_argument('--spec', required=True, help='JSON experiment file')
    parser.add_argument('--out', default=None, help='Output directory (default: output.dir or .)')
    parser.add_argument('--quiet', action='store_true', help='Log warnings only and print no table')
    parser.add_argument('--timings', action='store_true',
                        help='Record stage durations in the report (the report then differs between runs)')
    parser.add_argument('--seed', type=int, default=None, help='Seed of randomized checks')
    parser.add_argument('--tol-rank', type=float, default=None, help='Null-space rank tolerance')
    parser.add_argument('--beta', type=float, default=None, help='Override ensemble beta')
    parser.add_argument('--mu', type=float, default=None, help='Override ensemble mu')
    parser.add_argument('--set', nargs='*', default=[], metavar='KEY=VALUE',
                        help='Override tolerances, e.g. --set tol_E=1e-8 tol_w=1e-12')
    return parser


def load_experiment(path: str) -> Dict[str, Any]:
    """
    Raises:
        ValidationError: Unreadable file or invalid JSON
    """
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except OSError as exc:
        raise ValidationError(f"Cannot read experiment file '{path}': {exc.strerror or exc}", field='spec') from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"Invalid JSON in '{path}' at line {exc.lineno} column {exc.colno}: {exc.msg}",
                              field='spec') from exc


def _apply_flags(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    if args.command:
        spec.analysis = args.command.replace('-', '_')
    if args.seed is not None:
        spec.seed = args.seed
    overrides = parse_overrides(args.set)
    unparsed = [item for item in args.set if '=' not in item]
    if unparsed:
        raise ValidationError(f"--set expects key=value, got {unparsed}", field='set')
    if args.tol_rank is not None:
        overrides['tol_rank'] = args.tol_rank
    spec.tolerances = spec.tolerances.with_overrides(**overrides)
    if args.beta is not None:
        spec.ensemble['beta'] = args.beta
    if args.mu is not None:
        spec.ensemble['mu'] = args.mu
    return spec


def write_report(sections: Mapping[str, Any], path: str) -> str:
    """Write the report atomically with sorted keys."""
    text = json.dumps(sections, indent=2, sort_keys=True, allow_nan=False) + '\n'
    return atomic_write_text(path, text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one analysis from the command line.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Exit code (0 success, 2 invalid input, 3 failed check, 1 other error)
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    try:
        spec = _apply_flags(ExperimentSpec.from_dict(load_experiment(args.spec)), args)
        out_dir = args.out or spec.output.get('dir', '.')
        lab = ResponseLab(spec.model, spec.sector, spec.ensemble, spec.probes, spec.tolerances, spec.seed)
        runner, _ = ANALYSIS_TYPES[spec.analysis]
        lines = runner(lab, spec, out_dir)

        sections = lab.report(include_timings=args.timings)
        sections['analysis'] = spec.analysis
        sections['timestamp'] = datetime.now(timezone.utc).isoformat()
        report_path = write_report(sections, os.path.join(out_dir, spec.output.get('report', DEFAULT_REPORT)))
        if not args.quiet:
            print(f"{spec.analysis} - {lab!r}")
            print("=" * 60)
            for line in lines:
                print(line)
            print(f"report: {report_path}")
        return EXIT_OK
    except ValidationError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_INVALID
    except CheckFailure as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True, default=str), file=sys.stderr)
        return EXIT_CHECK_FAILED
    except KernelLabError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

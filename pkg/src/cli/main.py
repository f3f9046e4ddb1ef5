from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
import argparse
import asyncio
import logging
import sys

from ..business_logic.config_manager import ConfigManager
from ..business_logic.experiment_service import ExperimentService
from ..business_logic.report_service import ReportService
from ..business_logic.run_ledger import RunLedger
from ..hfclock import Reading
from ..nuclear_data import validate_registry
from .scenario import MAX_SEED, REQUIRED_SECTIONS, ScenarioDocument, ScenarioError, parse_scenario

PROG = 'isoclock'

DESCRIPTIONS = {
    'chain': "Irradiate a target and write the inventory of every chain nuclide over time",
    'separation': "Apply a cascade of isotope-separation stages and write per-stage purity",
    'ramsey': "Simulate one Ramsey fringe, fit its center and write the fringe counts",
    'campaign': "Compare new and natural ion ensembles under a drift model",
    'jumps': "Monte Carlo of the three-level ladder: telegraph runs, aging and memoryless tests",
    'validate': "Check the nuclear data file against the registry invariants",
}


@dataclass
class RunResult:
    status: int
    outputs: List[Path] = field(default_factory=list)
    summary: str = ''
    readings: Tuple[Reading, ...] = ()


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--nuclides', help="nuclear data file (overrides ISOCLOCK_NUCLIDES and settings)")
    common.add_argument('--config', help="settings JSON (overrides ISOCLOCK_CONFIG)")
    common.add_argument('--db', help="SQLAlchemy URL of a run ledger to record this run in")
    common.add_argument('--verbose', action='store_true', help="log at DEBUG level")
    common.add_argument('--quiet', action='store_true', help="do not print the summary line")

    scenario_flags = argparse.ArgumentParser(add_help=False)
    scenario_flags.add_argument('scenario', help="scenario file (sectioned key=value text)")
    scenario_flags.add_argument('--out', help="output CSV path; extra tables go next to it")
    scenario_flags.add_argument('--seed', type=_seed, help="master seed (u64); overrides output.seed")
    scenario_flags.add_argument('--format', choices=['csv'], default='csv', help="output format")

    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Transmutation yields and hyperfine-clock comparison simulations",
    )
    subparsers = parser.add_subparsers(dest='subcommand', required=True)
    for name in REQUIRED_SECTIONS:
        needs = ' '.join(f"[{section}]" for section in REQUIRED_SECTIONS[name])
        subparsers.add_parser(name, parents=[common, scenario_flags], help=DESCRIPTIONS[name],
                              description=f"{DESCRIPTIONS[name]}. Scenario needs {needs}.")
    subparsers.add_parser('validate', parents=[common], help=DESCRIPTIONS['validate'],
                          description=DESCRIPTIONS['validate'])
    return parser


async def execute(subcommand: str,
                  document: ScenarioDocument,
                  service: ExperimentService,
                  seed: int,
                  out: Path) -> RunResult:
    """Run one subcommand on a validated document and write its tables"""
    reports = ReportService(seed, document.name, subcommand)
    readings = ()
    if subcommand == 'chain':
        outcome = await service.run_chain(document)
        outputs, summary = reports.write_chain(outcome, out), reports.chain_summary(outcome)
    elif subcommand == 'separation':
        outcome = await service.run_separation(document)
        outputs, summary = reports.write_separation(outcome, out), reports.separation_summary(outcome)
    elif subcommand == 'ramsey':
        outcome = await service.run_ramsey(document, seed)
        outputs, summary = reports.write_ramsey(outcome, out), reports.ramsey_summary(outcome)
    elif subcommand == 'campaign':
        outcome = await service.run_campaign(document, seed)
        outputs, summary = reports.write_campaign(outcome, out), reports.campaign_summary(outcome)
        readings = outcome.result.readings
    elif subcommand == 'jumps':
        outcome = await service.run_jumps(document, seed)
        outputs, summary = reports.write_jumps(outcome, out), reports.jumps_summary(outcome)
    else:
        raise ValueError(f"Unknown subcommand {subcommand!r}")
    return RunResult(0, outputs, summary, tuple(readings))


def run(subcommand: str,
        document: ScenarioDocument,
        seed: Optional[int] = None,
        out: Optional[Path] = None,
        service: Optional[ExperimentService] = None) -> RunResult:
    """Validate the document for the subcommand, run it and write its outputs"""
    document.require(subcommand)
    service = service or ExperimentService()
    if seed is None:
        seed = document.seed if document.seed is not None else 0
    if out is None:
        out = Path(document.out) if document.out else Path(f"{document.name or 'scenario'}_{subcommand}.csv")
    result = asyncio.run(execute(subcommand, document, service, seed, Path(out)))
    logging.info(f"{subcommand} finished: {', '.join(str(path) for path in result.outputs)}")
    service.monitor.log_statistics()
    return result


def _validate(service: ExperimentService, quiet: bool) -> int:
    registry = service.registry
    violations = validate_registry(registry)
    for violation in violations:
        print(f"{PROG} validate: {violation}", file=sys.stderr)
    if not quiet:
        print(f"validate: {len(registry)} nuclides, {len(registry.captures)} captures, "
              f"{len(violations)} violation(s)")
    return 1 if violations else 0


def _record(args, service: ExperimentService, document: ScenarioDocument, seed: int, result: RunResult):
    url = args.db or (service.config.get_setting('database.url')
                      if service.config.get_setting('database.record_runs', False) else None)
    if not url:
        return
    RunLedger(url).record_run(args.subcommand, document.text, seed, result.outputs, result.summary,
                              scenario_name=document.name, readings=result.readings)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    service = ExperimentService(ConfigManager(args.config) if args.config else None, nuclides_path=args.nuclides)
    service.setup_logging(args.verbose)
    context = f"{PROG} {args.subcommand}"
    try:
        if args.subcommand == 'validate':
            return _validate(service, args.quiet)

        path = Path(args.scenario)
        text = path.read_text(encoding='utf-8')
        document = parse_scenario(text, args.subcommand, name=path.stem)
        seed = args.seed if args.seed is not None else (document.seed if document.seed is not None else 0)
        result = run(args.subcommand, document, seed, Path(args.out) if args.out else None, service)
        _record(args, service, document, seed, result)
    except ScenarioError as e:
        for message in e.errors:
            print(f"{context}: {message}", file=sys.stderr)
        logging.error(f"{context}: scenario rejected with {len(e.errors)} error(s)")
        return 1
    except (ValueError, ArithmeticError, LookupError, RuntimeError, OSError) as e:
        print(f"{context}: {type(e).__name__}: {e}", file=sys.stderr)
        logging.error(f"{context} failed: {e}")
        return 1

    if not args.quiet:
        print(result.summary)
    return 0


if __name__ == '__main__':
    sys.exit(main())

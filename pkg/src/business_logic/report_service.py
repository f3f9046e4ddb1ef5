from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union
import csv
import logging

import numpy as np

from .experiment_service import ChainOutcome, CampaignOutcome, JumpsOutcome, RamseyOutcome, SeparationOutcome


def format_value(value: Any) -> str:
    """Shortest text that parses back to the same value"""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ''
    return str(value)


def sibling(path: Union[str, Path], suffix: str) -> Path:
    """results.csv + 'probes' -> results_probes.csv"""
    path = Path(path)
    return path.with_name(f"{path.stem}_{suffix}{path.suffix or '.csv'}")


class ReportService:
    """Writes run outcomes as CSV tables and one-line summaries"""

    def __init__(self, seed: Optional[int], scenario: str, subcommand: str):
        self.seed = seed
        self.scenario = scenario
        self.subcommand = subcommand

    @property
    def header(self) -> str:
        return f"# seed={format_value(self.seed)} scenario={self.scenario} subcommand={self.subcommand}"

    def write_table(self, path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(self.header + '\n')
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(value) for value in row])
        logging.info(f"Wrote {path}")
        return path

    # --- tables -------------------------------------------------------------

    def write_chain(self, outcome: ChainOutcome, path: Union[str, Path]) -> List[Path]:
        trajectory = outcome.trajectory
        columns = ['time_s'] + list(trajectory.names)
        rows = ([t] + list(trajectory.counts[:, k]) for k, t in enumerate(trajectory.times))
        return [self.write_table(path, columns, rows)]

    def write_separation(self, outcome: SeparationOutcome, path: Union[str, Path]) -> List[Path]:
        columns = ['stage', 'label', 'suppression', 'cumulative_suppression', 'product_purity',
                   'contaminant_fraction', 'cumulative_recovery']
        rows = []
        for row in outcome.table:
            stage = outcome.plan.stages[row.stage - 1] if row.stage > 0 else None
            rows.append([row.stage,
                         stage.label if stage is not None else 'feed',
                         stage.suppression if stage is not None else 1.0,
                         row.cumulative_suppression,
                         row.product_purity,
                         row.contaminant_fraction,
                         row.cumulative_recovery])
        return [self.write_table(path, columns, rows)]

    def write_ramsey(self, outcome: RamseyOutcome, path: Union[str, Path]) -> List[Path]:
        fringe = outcome.fringe
        rows = ([hz, k, fringe.shots_per_point] for hz, k in zip(fringe.detunings_hz, fringe.successes))
        written = [self.write_table(path, ['detuning_hz', 'successes', 'shots'], rows)]
        if outcome.trials:
            trial_rows = ([i, e.offset_fractional, e.sigma_fractional, e.chi_square]
                          for i, e in enumerate(outcome.trials))
            written.append(self.write_table(sibling(path, 'trials'),
                                            ['trial', 'offset_fractional', 'sigma_fractional', 'chi_square'],
                                            trial_rows))
        return written

    def write_campaign(self, outcome: CampaignOutcome, path: Union[str, Path]) -> List[Path]:
        rows = ([r.ion_id, r.label, r.trap, r.epoch_s, r.estimate, r.sigma] for r in outcome.result.readings)
        written = [self.write_table(path, ['ion_id', 'label', 'trap', 'epoch_s', 'estimate', 'sigma'], rows)]
        if outcome.trials:
            trial_rows = ([i, t.comparison.delta_fractional, t.comparison.sigma_fractional,
                           t.comparison.z_score, t.comparison.distinguishable]
                          for i, t in enumerate(outcome.trials))
            written.append(self.write_table(sibling(path, 'trials'),
                                            ['trial', 'delta_fractional', 'sigma_fractional', 'z_score',
                                             'distinguishable'],
                                            trial_rows))
        return written

    def write_jumps(self, outcome: JumpsOutcome, path: Union[str, Path]) -> List[Path]:
        runs = ([run.run_id, run.decay_time_s, run.observed_decay_s, len(run.probes)] for run in outcome.runs)
        probes = ([run.run_id, p.t_probe_s, p.freq_frac, p.sigma, p.counts, p.bright]
                  for run in outcome.runs for p in run.probes)
        return [
            self.write_table(path, ['run_id', 'decay_time_s', 'observed_decay_s', 'probes'], runs),
            self.write_table(sibling(path, 'probes'),
                             ['run_id', 't_probe_s', 'freq_frac', 'sigma', 'counts', 'bright'], probes),
        ]

    # --- one-line summaries -------------------------------------------------

    @staticmethod
    def chain_summary(outcome: ChainOutcome) -> str:
        report = outcome.report
        parts = [f"{report.nuclide}: {report.mass_g:.6g} g ({report.atoms:.6g} atoms) at "
                 f"t={report.t_end_s / 86400.0:g} d",
                 f"linearity {report.linearity:.3%}"]
        for contaminant, ratio in report.contaminant_ratios.items():
            parts.append(f"{contaminant}/{report.nuclide} {ratio:.3%} ({report.classifications[contaminant]})")
        if outcome.saturation is not None:
            parts.append(f"{outcome.intermediate} at {outcome.saturation:.4%} of saturation")
        return 'chain ' + '; '.join(parts)

    @staticmethod
    def separation_summary(outcome: SeparationOutcome) -> str:
        report = outcome.report
        product = outcome.plan.product
        text = (f"separation {product}: purity {report.composition.get(product, 0.0):.10g}, "
                f"suppression {report.suppression:.3g}, recovered {report.recovered_fraction:.6g}")
        if report.stages_required is not None:
            text += f", {report.stages_required} stage(s) for {outcome.plan.target_suppression:.3g}"
        return text

    @staticmethod
    def ramsey_summary(outcome: RamseyOutcome) -> str:
        estimate = outcome.estimate
        text = (f"ramsey {outcome.clock.nuclide}: offset {estimate.offset_fractional:.6g} "
                f"+/- {estimate.sigma_fractional:.3g}, FWHM {outcome.fwhm_hz:.6g} Hz")
        if outcome.required_shots is not None:
            text += f", required shots {outcome.required_shots}"
        if outcome.trials:
            offsets = np.array([e.offset_fractional for e in outcome.trials])
            text += f", trial spread {offsets.std(ddof=1) if len(offsets) > 1 else 0.0:.3g}"
        return text

    @staticmethod
    def campaign_summary(outcome: CampaignOutcome) -> str:
        comparison = outcome.result.comparison
        text = (f"campaign: delta {comparison.delta_fractional:.6g} +/- {comparison.sigma_fractional:.3g}, "
                f"z={comparison.z_score:.3f}, {comparison.verdict} at alpha={comparison.alpha:g}")
        age = outcome.result.age_estimate
        if age is not None:
            text += f", natural age {age.age_s:.4g} s [{age.lower_s:.4g}, {age.upper_s:.4g}]"
        prediction = outcome.result.decay_prediction
        if prediction is not None:
            text += f", decay at {prediction.decay_time_s:.6g} +/- {prediction.sigma_s:.3g} s"
        if outcome.detection_fraction is not None:
            text += f", detected in {outcome.detection_fraction:.1%} of {len(outcome.trials)} trials"
        return text

    @staticmethod
    def jumps_summary(outcome: JumpsOutcome) -> str:
        parts = [f"jumps: {len(outcome.runs)} runs"]
        if outcome.aging is not None:
            parts.append(f"beta {outcome.aging.beta_per_s:.4g} +/- {outcome.aging.sigma_per_s:.3g} /s "
                         f"(z={outcome.aging.z_score:.3f})")
        if outcome.memoryless is not None:
            parts.append(f"KS {outcome.memoryless.statistic:.4g}, p={outcome.memoryless.p_value:.4g}")
        return '; '.join(parts)

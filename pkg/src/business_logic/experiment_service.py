from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar
import asyncio
import logging
import math

import numpy as np

from ..burnup import (
    ChainSpec, InventoryTrajectory, IrradiationScenario, YieldReport, build_chain, saturation_fraction,
    solve_inventory, yield_report,
)
from ..burnup.scenario import Segment
from ..cli.scenario import ScenarioDocument
from ..hfclock import (
    CampaignConfig, CampaignResult, DetectionModel, DriftModel, FrequencyEstimate, FringeData,
    HyperfineClockSpec, RamseyConfig, estimate_frequency, fringe_fwhm, required_shots, simulate_campaign,
    simulate_fringe,
)
from ..ladder import (
    AgingEstimate, JumpLadderConfig, JumpRun, LadderDetection, LadderError, MemorylessTest, detect_aging,
    make_schedule, simulate_run, test_memoryless,
)
from ..nuclear_data import NuclideId, NuclideRegistry, load_registry_file
from ..separation import PurityReport, SeparationPlan, StageRow, purity_after, stage_table
from .config_manager import ConfigManager
from .performance_monitor import PerformanceMonitor
from .seeding import FRINGE_STREAM, LADDER_STREAM, TRIAL_STREAM, SeedLike, derive_seed

T = TypeVar('T')

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class ChainOutcome:
    scenario: IrradiationScenario
    chain: ChainSpec
    trajectory: InventoryTrajectory
    report: YieldReport
    saturation: Optional[float] = None
    intermediate: Optional[NuclideId] = None


@dataclass(frozen=True)
class SeparationOutcome:
    plan: SeparationPlan
    report: PurityReport
    table: List[StageRow]


@dataclass(frozen=True)
class RamseyOutcome:
    clock: HyperfineClockSpec
    config: RamseyConfig
    fringe: FringeData
    estimate: FrequencyEstimate
    fwhm_hz: float
    required_shots: Optional[int] = None
    trials: Tuple[FrequencyEstimate, ...] = ()


@dataclass(frozen=True)
class CampaignOutcome:
    result: CampaignResult
    trials: Tuple[CampaignResult, ...] = ()

    @property
    def detection_fraction(self) -> Optional[float]:
        if not self.trials:
            return None
        return sum(trial.comparison.distinguishable for trial in self.trials) / len(self.trials)


@dataclass(frozen=True)
class JumpsOutcome:
    config: JumpLadderConfig
    runs: List[JumpRun]
    aging: Optional[AgingEstimate]
    memoryless: Optional[MemorylessTest]


class ExperimentService:
    """Turns validated scenario documents into domain objects and runs them"""

    def __init__(self,
                 config: Optional[ConfigManager] = None,
                 nuclides_path: Optional[str] = None,
                 registry: Optional[NuclideRegistry] = None,
                 monitor: Optional[PerformanceMonitor] = None):
        self.config = config or ConfigManager()
        self.monitor = monitor or PerformanceMonitor(self.config.get_setting('performance.slow_threshold_s', 2.0))
        self.nuclides_path = nuclides_path or self.config.get_setting('nuclides.data_file')
        self.max_workers = int(self.config.get_setting('campaign.max_workers', 4))
        self._registry = registry

    def setup_logging(self, verbose: bool = False) -> Path:
        """Send log records to the configured file, never to stdout"""
        directory = Path(self.config.get_setting('logging.directory', 'logs'))
        directory.mkdir(parents=True, exist_ok=True)
        log_file = directory / self.config.get_setting('logging.file', 'isoclock.log')
        configured = str(self.config.get_setting('logging.level', 'INFO')).upper()
        level = logging.DEBUG if verbose else getattr(logging, configured, logging.INFO)
        logging.basicConfig(filename=str(log_file), level=level, format=LOG_FORMAT)
        logging.getLogger().setLevel(level)
        return log_file

    @property
    def registry(self) -> NuclideRegistry:
        if self._registry is None:
            self._registry = load_registry_file(self.nuclides_path)
        return self._registry

    # --- scenario document -> domain objects -------------------------------

    def build_irradiation(self, document: ScenarioDocument) -> IrradiationScenario:
        target = document.section('target')
        reactor = document.section('reactor')
        output = document.section('output')
        if 'segments' in reactor:
            segments = reactor['segments']
        else:
            segments = (Segment(reactor['duration'], reactor['flux']),)
        product = output.get('product') or self._default_product(target['nuclide'])
        return IrradiationScenario.from_target(
            self.registry,
            target['nuclide'],
            target['mass_g'],
            segments,
            enrichment=target.get('enrichment', 1.0),
            impurities=target.get('impurities'),
            grid_points=output.get('grid_points', self.config.get_setting('burnup.grid_points', 300)),
            product=product,
            depth=target.get('depth', self.config.get_setting('burnup.depth', 2)),
            negligible_threshold=output.get('negligible_threshold',
                                            self.config.get_setting('burnup.negligible_threshold', 0.05)),
            name=document.name,
        )

    def _default_product(self, target: NuclideId) -> Optional[NuclideId]:
        """Ground state of the target's first capture product"""
        captures = self.registry.captures_from(target)
        return captures[0].product.ground if captures else None

    def build_plan(self, document: ScenarioDocument) -> SeparationPlan:
        section = document.section('separation')
        recovery = section.get('recovery', (1.0,))
        return SeparationPlan.from_factors(
            section['stages'],
            section['composition'],
            product=section['product'],
            recovery=recovery[0] if len(recovery) == 1 else recovery,
            wavelengths_nm=section.get('wavelengths', ()),
            target_suppression=section.get('target_suppression'),
        )

    def build_clock(self, document: ScenarioDocument) -> HyperfineClockSpec:
        section = document.section('clock')
        return HyperfineClockSpec(
            nuclide=section['nuclide'],
            nu0_hz=section['nu0_hz'],
            f_lower=section['f_lower'],
            f_upper=section['f_upper'],
            pump_nm=section.get('pump_nm'),
            detect_nm=section.get('detect_nm'),
            label=section.get('label', ''),
        )

    def build_ramsey(self, document: ScenarioDocument) -> RamseyConfig:
        section = document.section('ramsey')
        detection = None
        if 'bright_mean' in section:
            detection = DetectionModel(section['bright_mean'], section['dark_mean'], section.get('threshold', 2))
        pulse = section['pulse']
        return RamseyConfig(
            rabi_rad_s=section.get('rabi_rad_s', math.pi / (2.0 * pulse)),
            pulse_s=pulse,
            free_s=section['free'],
            shots=section['shots'],
            detection=detection,
            pulse_area_tolerance=self.config.get_setting('hfclock.pulse_area_tolerance', 0.01),
        )

    def build_drift(self, document: ScenarioDocument) -> DriftModel:
        section = document.section('drift')
        kind = section.get('kind', 'none')
        if kind == 'relaxation':
            return DriftModel.relaxation(section['amplitude'], section['tau'])
        if kind == 'predecay':
            decay_time = section.get('decay_time')
            if decay_time is None:
                nuclide = self.registry.lookup(document.get('clock', 'nuclide'))
                if nuclide.decay_constant == 0.0:
                    raise ValueError(f"{nuclide.name} is stable; set drift.decay_time")
                # mean life of the clock nuclide
                decay_time = 1.0 / nuclide.decay_constant
            return DriftModel.predecay(section['kappa_s'], decay_time)
        return DriftModel.none()

    def build_campaign(self, document: ScenarioDocument) -> CampaignConfig:
        section = document.section('campaign')
        return CampaignConfig(
            ions_new=section.get('ions_new', 8),
            ions_natural=section.get('ions_natural', 8),
            age_new_s=section.get('age_new', 0.0),
            age_natural_s=section.get('age_natural', 0.0),
            epochs=section.get('epochs', 1),
            epoch_spacing_s=section.get('epoch_spacing', 0.0),
            injected_offset=section.get('injected_offset', 0.0),
            alpha=section.get('alpha', self.config.get_setting('hfclock.alpha', 0.05)),
            trap_new=section.get('trap_new', 'A'),
            trap_natural=section.get('trap_natural', 'A'),
        )

    def build_ladder(self, document: ScenarioDocument) -> JumpLadderConfig:
        section = document.section('ladder')
        defaults = LadderDetection()
        detection = LadderDetection(
            cycling_rate_s=section.get('cycling_rate', defaults.cycling_rate_s),
            collection_efficiency=section.get('efficiency', defaults.collection_efficiency),
            window_s=section.get('window', defaults.window_s),
            dark_mean=section.get('dark_mean', defaults.dark_mean),
            threshold=section.get('threshold', defaults.threshold),
        )
        return JumpLadderConfig(
            lifetime_e1_s=section['lifetime_e1'],
            lifetime_e2_s=section['lifetime_e2'],
            probe_interval_s=section['probe_interval'],
            probe_perturbation=section.get('perturbation', 0.0),
            detection=detection,
            aging_beta_per_s=section.get('beta', 0.0),
            probe_sigma_fractional=section.get('probe_sigma', 1e-7),
            horizon_s=section.get('horizon', self.config.get_setting('ladder.horizon_lifetimes', 50)
                                  * section['lifetime_e1']),
            zeno_budget=section.get('zeno_budget', self.config.get_setting('ladder.zeno_budget', 0.01)),
            hazard_slope_per_s=section.get('hazard_slope', 0.0),
            nu2_hz=section.get('nu2_hz'),
            label=section.get('label', ''),
        )

    # --- parallel trials ----------------------------------------------------

    async def run_trials(self, func: Callable[[np.random.SeedSequence], T], seeds: Sequence[Any]) -> List[T]:
        """Run func once per seed on the worker pool; results keep seed order"""
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [loop.run_in_executor(executor, partial(func, seed)) for seed in seeds]
            return list(await asyncio.gather(*futures))

    # --- subcommands --------------------------------------------------------

    async def run_chain(self, document: ScenarioDocument) -> ChainOutcome:
        with self.monitor.track('chain'):
            scenario = self.build_irradiation(document)
            if scenario.product is None:
                raise ValueError(f"{scenario.target} has no capture reaction; set output.product")
            chain = build_chain(self.registry, scenario.seeds, depth=scenario.depth)
            trajectory = solve_inventory(
                chain, scenario, self.config.get_setting('burnup.confluence_tolerance', 1e-12))
            report = yield_report(trajectory, scenario.product, negligible_threshold=scenario.negligible_threshold)
            intermediate = document.get('output', 'intermediate')
            saturation = saturation_fraction(trajectory, intermediate) if intermediate is not None else None
        logging.info(f"Chain run {document.name or '<scenario>'}: {report.nuclide} = {report.mass_g:.6g} g")
        return ChainOutcome(scenario, chain, trajectory, report, saturation, intermediate)

    async def run_separation(self, document: ScenarioDocument) -> SeparationOutcome:
        with self.monitor.track('separation'):
            plan = self.build_plan(document)
            outcome = SeparationOutcome(plan, purity_after(plan), stage_table(plan))
        return outcome

    async def run_ramsey(self, document: ScenarioDocument, seed: SeedLike) -> RamseyOutcome:
        section = document.section('ramsey')
        clock = self.build_clock(document)
        config = self.build_ramsey(document)
        points = section.get('points', self.config.get_setting('hfclock.fringe_points', 9))
        span = section.get('span', self.config.get_setting('hfclock.fringe_span', 0.8))
        offset = section.get('offset', 0.0)
        max_iterations = self.config.get_setting('hfclock.max_iterations', 100)
        tolerance = self.config.get_setting('hfclock.tolerance', 1e-12)

        def one_fringe(stream: np.random.SeedSequence, analytic: bool = False) -> Tuple[FringeData, FrequencyEstimate]:
            fringe = simulate_fringe(clock, config, offset, np.random.default_rng(stream),
                                     analytic=analytic, points=points, span=span)
            return fringe, estimate_frequency(fringe, max_iterations=max_iterations, tolerance=tolerance)

        with self.monitor.track('ramsey'):
            fringe, estimate = one_fringe(derive_seed(seed, FRINGE_STREAM), section.get('analytic', False))
            trials: Tuple[FrequencyEstimate, ...] = ()
            if section.get('trials', 1) > 1:
                seeds = [derive_seed(seed, TRIAL_STREAM, i) for i in range(section['trials'])]
                trials = tuple(result[1] for result in await self.run_trials(one_fringe, seeds))
            shots = None
            if 'target_sigma' in section:
                shots = required_shots(section['target_sigma'], clock.nu0_hz, config.free_s)
            outcome = RamseyOutcome(clock, config, fringe, estimate, fringe_fwhm(config), shots, trials)
        logging.info(f"Ramsey run on {clock.nuclide}: offset {estimate.offset_fractional:.6g} "
                     f"+/- {estimate.sigma_fractional:.3g}")
        return outcome

    async def run_campaign(self, document: ScenarioDocument, seed: SeedLike) -> CampaignOutcome:
        section = document.section('ramsey')
        clock = self.build_clock(document)
        ramsey = self.build_ramsey(document)
        drift = self.build_drift(document)
        campaign = self.build_campaign(document)
        points = section.get('points', self.config.get_setting('hfclock.fringe_points', 9))
        span = section.get('span', self.config.get_setting('hfclock.fringe_span', 0.8))
        run = partial(simulate_campaign, clock, ramsey, drift, campaign, points=points, span=span)

        with self.monitor.track('campaign'):
            loop = asyncio.get_running_loop()
            result = await loop.run_in_executor(None, partial(run, seed=seed))
            trials: Tuple[CampaignResult, ...] = ()
            count = document.get('campaign', 'trials', 1)
            if count > 1:
                seeds = [derive_seed(seed, TRIAL_STREAM, i) for i in range(count)]
                trials = tuple(await self.run_trials(lambda s: run(seed=s), seeds))
        return CampaignOutcome(result, trials)

    async def run_jumps(self, document: ScenarioDocument, seed: SeedLike) -> JumpsOutcome:
        section = document.section('ladder')
        config = self.build_ladder(document)
        count = section.get('runs', 1000)
        resamples = section.get('resamples', self.config.get_setting('ladder.bootstrap_resamples', 1000))

        with self.monitor.track('jumps'):
            schedule = make_schedule(config)
            seeds = [derive_seed(seed, LADDER_STREAM, run_id) for run_id in range(count)]
            runs = await self.run_trials(lambda s: simulate_run(config, s, int(s.spawn_key[-1]), schedule), seeds)

            aging = None
            try:
                aging = detect_aging(runs)
            except LadderError as e:
                logging.warning(f"No aging estimate: {e}")
            memoryless = None
            if count >= 10:
                memoryless = test_memoryless([run.decay_time_s for run in runs], resamples, seed)
            else:
                logging.warning(f"{count} runs are too few for the memoryless test")
        return JumpsOutcome(config, runs, aging, memoryless)

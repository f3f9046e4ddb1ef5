from typing import Dict, Iterable, List, Optional, Sequence
import hashlib
import logging
from pathlib import Path

from sqlalchemy import select
from sqlalchemy.engine import make_url

from ..database.db_manager import DatabaseManager
from ..database.models import ClockReadingRecord, RunRecord
from ..hfclock.comparison import Reading


class RunLedger:
    """Optional record of CLI runs; never touches output files"""

    def __init__(self, url: str):
        self._ensure_directory(url)
        self.db = DatabaseManager()
        self.db.initialize(url)

    @staticmethod
    def _ensure_directory(url: str):
        parsed = make_url(url)
        if parsed.get_backend_name() == 'sqlite' and parsed.database not in (None, '', ':memory:'):
            Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def digest(scenario_text: str) -> str:
        return hashlib.sha256(scenario_text.encode('utf-8')).hexdigest()

    def record_run(self,
                   subcommand: str,
                   scenario_text: str,
                   seed: Optional[int],
                   outputs: Sequence[str],
                   summary: str,
                   scenario_name: str = '',
                   readings: Iterable[Reading] = ()) -> int:
        """Store one run with its clock readings and return its id"""
        with self.db.session_scope() as session:
            run = RunRecord(
                subcommand=subcommand,
                scenario_name=scenario_name,
                scenario_digest=self.digest(scenario_text),
                seed=None if seed is None else str(seed),
                outputs='\n'.join(str(path) for path in outputs),
                summary=summary,
            )
            run.readings = [
                ClockReadingRecord(ion_id=r.ion_id, label=r.label, trap=r.trap,
                                   epoch_s=r.epoch_s, estimate=r.estimate, sigma=r.sigma)
                for r in readings
            ]
            session.add(run)
            session.flush()
            run_id = run.id
        logging.info(f"Recorded {subcommand} run {run_id} in the run ledger")
        return run_id

    def list_runs(self) -> List[Dict]:
        with self.db.session_scope() as session:
            runs = session.execute(select(RunRecord).order_by(RunRecord.id)).scalars().all()
            return [
                {
                    'id': run.id,
                    'subcommand': run.subcommand,
                    'scenario_name': run.scenario_name,
                    'scenario_digest': run.scenario_digest,
                    'seed': None if run.seed is None else int(run.seed),
                    'outputs': run.outputs.split('\n') if run.outputs else [],
                    'summary': run.summary,
                    'readings': len(run.readings),
                    'created_at': run.created_at,
                }
                for run in runs
            ]

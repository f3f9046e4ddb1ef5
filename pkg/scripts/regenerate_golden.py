#!/usr/bin/env python
"""Rewrite tests/golden/<scenario>.csv from the shipped chain scenarios.

Run only after a deliberate change to the solver or the nuclear data file;
the golden test compares these files byte for byte.
"""
import argparse
from pathlib import Path
import sys

ROOT = Path(__file__).resolve().parents[1]
sys.path.append(str(ROOT))

from src.cli.main import main as isoclock

GOLDEN_SCENARIOS = ('sr87', 'lu175', 'lu176', 'tm170')


def main() -> int:
    p = argparse.ArgumentParser(description="Regenerate golden chain CSVs")
    p.add_argument("--out-dir", default=str(ROOT / "tests" / "golden"), help="Directory for the CSV files")
    args = p.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in GOLDEN_SCENARIOS:
        status = isoclock(['chain', str(ROOT / 'scenarios' / f'{name}.scn'),
                           '--out', str(out_dir / f'{name}.csv'), '--quiet'])
        if status != 0:
            print(f"{name}: isoclock exited with {status}", file=sys.stderr)
            return status
        print(out_dir / f'{name}.csv')
    return 0


if __name__ == "__main__":
    sys.exit(main())

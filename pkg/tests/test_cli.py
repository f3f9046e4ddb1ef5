import pytest
import csv
import logging

import numpy as np

from src.business_logic.run_ledger import RunLedger
from src.cli.main import build_parser, main, run
from src.cli.scenario import parse_scenario

GOLDEN_SCENARIOS = ('sr87', 'lu175', 'lu176', 'tm170')

ZERO_FLUX = """
[target] nuclide=Sr-86 mass_g=20
[reactor] flux=0 duration=10d
[output] grid_points=11 product=Sr-87 seed=3
"""

SMALL_RAMSEY = """
[clock] nuclide=Sr-87 nu0_hz=5.0e9 f_lower=4 f_upper=5
[ramsey] free=0.1s pulse=1ms shots=100000 trials=3 target_sigma=2e-14
[output] seed=11
"""

SMALL_CAMPAIGN = """
[clock] nuclide=Sr-87 nu0_hz=5.0e9 f_lower=4 f_upper=5
[ramsey] free=0.1s pulse=1ms shots=100000
[campaign] ions_new=2 ions_natural=3 injected_offset=1e-11 trials=2
[output] seed=12
"""

SMALL_LADDER = """
[ladder] lifetime_e1=100s lifetime_e2=86ms probe_interval=10s perturbation=1e-5 runs=20 resamples=50
[output] seed=13
"""


def read_table(path):
    """Header comment and parsed CSV rows"""
    with open(path, encoding='utf-8') as f:
        comment = f.readline().rstrip('\n')
        rows = list(csv.reader(f))
    return comment, rows[0], rows[1:]


@pytest.fixture
def cli(config_manager):
    """Invoke the CLI with the test settings file"""
    def invoke(*argv):
        return main([argv[0], *argv[1:], '--config', str(config_manager.config_file)])
    return invoke


@pytest.fixture
def write_scenario(tmp_path):
    def write(text, name='scenario'):
        path = tmp_path / f'{name}.scn'
        path.write_text(text, encoding='utf-8')
        return path
    return write


class TestParser:
    def test_help_lists_flags(self, capsys):
        assert main(['chain', '--help']) == 0
        text = capsys.readouterr().out
        for flag in ('--out', '--seed', '--format', '--quiet', '--nuclides'):
            assert flag in text

    def test_usage_errors(self, capsys):
        assert main([]) == 2
        assert main(['frobnicate', 'x.scn']) == 2
        assert main(['chain']) == 2
        assert main(['chain', 'x.scn', '--seed', '-1']) == 2
        assert main(['chain', 'x.scn', '--seed', str(2 ** 64)]) == 2
        assert main(['chain', 'x.scn', '--format', 'json']) == 2

    def test_every_subcommand(self):
        parser = build_parser()
        for name in ('chain', 'separation', 'ramsey', 'campaign', 'jumps'):
            args = parser.parse_args([name, 'x.scn', '--seed', '18446744073709551615'])
            assert args.seed == 2 ** 64 - 1
        assert parser.parse_args(['validate']).subcommand == 'validate'


class TestChain:
    def test_sr87_five_days(self, cli, scenario_dir, tmp_path, registry, capsys):
        """Test the shipped Sr-87 scenario holds about 0.1 mg of Sr-87 at day 5"""
        out = tmp_path / 'sr87.csv'
        assert cli('chain', str(scenario_dir / 'sr87.scn'), '--out', str(out)) == 0
        comment, columns, rows = read_table(out)
        assert comment == '# seed=87 scenario=sr87 subcommand=chain'
        assert columns[0] == 'time_s'
        assert len(rows) == 301
        day5 = rows[50]
        assert float(day5[0]) == pytest.approx(5 * 86400.0)
        mass = registry.lookup('Sr-87').atoms_to_grams(float(day5[columns.index('Sr-87')]))
        assert 0.5e-4 <= mass <= 2.0e-4
        assert capsys.readouterr().out.startswith('chain Sr-87:')

    def test_zero_flux_columns_are_constant(self, write_scenario, experiment_service, tmp_path):
        document = parse_scenario(ZERO_FLUX, 'chain', name='zero')
        result = run('chain', document, out=tmp_path / 'zero.csv', service=experiment_service)
        assert result.status == 0
        _, columns, rows = read_table(result.outputs[0])
        values = np.array([[float(v) for v in row[1:]] for row in rows])
        assert np.all(values == values[0])
        assert values[0][columns.index('Sr-86') - 1] > 0
        assert values[0][columns.index('Sr-87') - 1] == 0.0

    def test_zero_duration_writes_initial_inventory(self, experiment_service, tmp_path):
        """Test a zero-length irradiation writes one row with no product"""
        text = ZERO_FLUX.replace('flux=0 duration=10d', 'flux=1.0e13 duration=0d')
        result = run('chain', parse_scenario(text, 'chain', name='instant'), out=tmp_path / 'instant.csv',
                     service=experiment_service)
        _, columns, rows = read_table(result.outputs[0])
        assert len(rows) == 1
        assert float(rows[0][0]) == 0.0
        assert float(rows[0][columns.index('Sr-87')]) == 0.0
        assert result.summary.startswith('chain Sr-87: 0 g')

    def test_seed_flag_overrides_scenario(self, cli, scenario_dir, tmp_path):
        out = tmp_path / 'tm170.csv'
        assert cli('chain', str(scenario_dir / 'tm170.scn'), '--out', str(out), '--seed', '5', '--quiet') == 0
        assert read_table(out)[0].startswith('# seed=5 ')

    def test_round_trip_values(self, cli, scenario_dir, tmp_path):
        """Test every CSV number reparses to the value written"""
        out = tmp_path / 'lu176.csv'
        assert cli('chain', str(scenario_dir / 'lu176.scn'), '--out', str(out), '--quiet') == 0
        _, _, rows = read_table(out)
        for value in rows[-1]:
            assert repr(float(value)) == value

    def test_run_logs_performance(self, experiment_service, tmp_path, caplog):
        with caplog.at_level(logging.DEBUG):
            run('chain', parse_scenario(ZERO_FLUX, 'chain', name='zero'), out=tmp_path / 'zero.csv',
                service=experiment_service)
        assert 'Performance: {"statistics": {"chain"' in caplog.text


class TestDeterminism:
    @pytest.mark.parametrize('subcommand,text', [
        ('chain', ZERO_FLUX),
        ('ramsey', SMALL_RAMSEY),
        ('campaign', SMALL_CAMPAIGN),
        ('jumps', SMALL_LADDER),
    ])
    def test_byte_identical_outputs(self, cli, write_scenario, tmp_path, subcommand, text):
        """Test the same scenario and seed write the same bytes"""
        path = write_scenario(text)
        first, second = tmp_path / 'first' / 'out.csv', tmp_path / 'second' / 'out.csv'
        assert cli(subcommand, str(path), '--out', str(first), '--quiet') == 0
        assert cli(subcommand, str(path), '--out', str(second), '--quiet') == 0
        first_files = sorted(p.name for p in first.parent.iterdir())
        assert first_files == sorted(p.name for p in second.parent.iterdir())
        for name in first_files:
            assert (first.parent / name).read_bytes() == (second.parent / name).read_bytes()

    def test_different_seed_changes_fringe(self, cli, write_scenario, tmp_path):
        path = write_scenario(SMALL_RAMSEY)
        assert cli('ramsey', str(path), '--out', str(tmp_path / 'a.csv'), '--quiet') == 0
        assert cli('ramsey', str(path), '--out', str(tmp_path / 'b.csv'), '--seed', '99', '--quiet') == 0
        assert read_table(tmp_path / 'a.csv')[2] != read_table(tmp_path / 'b.csv')[2]


class TestSubcommands:
    def test_separation(self, cli, scenario_dir, tmp_path, capsys):
        out = tmp_path / 'separation.csv'
        assert cli('separation', str(scenario_dir / 'sr87.scn'), '--out', str(out)) == 0
        _, columns, rows = read_table(out)
        assert columns[:2] == ['stage', 'label']
        assert [row[0] for row in rows] == ['0', '1', '2']
        assert 'purity' in capsys.readouterr().out

    def test_ramsey_writes_trials(self, cli, write_scenario, tmp_path, capsys):
        out = tmp_path / 'fringe.csv'
        assert cli('ramsey', str(write_scenario(SMALL_RAMSEY)), '--out', str(out)) == 0
        _, columns, rows = read_table(out)
        assert columns == ['detuning_hz', 'successes', 'shots']
        assert len(rows) == 9
        assert len(read_table(tmp_path / 'fringe_trials.csv')[2]) == 3
        assert 'required shots' in capsys.readouterr().out

    def test_campaign_readings(self, write_scenario, experiment_service, tmp_path):
        document = parse_scenario(SMALL_CAMPAIGN, 'campaign', name='small')
        result = run('campaign', document, out=tmp_path / 'campaign.csv', service=experiment_service)
        assert len(result.readings) == 5
        _, columns, rows = read_table(result.outputs[0])
        assert columns == ['ion_id', 'label', 'trap', 'epoch_s', 'estimate', 'sigma']
        assert [row[1] for row in rows].count('natural') == 3
        assert len(result.outputs) == 2

    def test_jumps_tables(self, cli, write_scenario, tmp_path):
        out = tmp_path / 'jumps.csv'
        assert cli('jumps', str(write_scenario(SMALL_LADDER)), '--out', str(out), '--quiet') == 0
        _, columns, rows = read_table(out)
        assert columns == ['run_id', 'decay_time_s', 'observed_decay_s', 'probes']
        assert [row[0] for row in rows] == [str(i) for i in range(20)]
        assert read_table(tmp_path / 'jumps_probes.csv')[1][:2] == ['run_id', 't_probe_s']


class TestErrors:
    def test_scenario_errors_exit_one(self, cli, write_scenario, capsys):
        assert cli('chain', str(write_scenario("[target] nuclide=Sr-86\n"))) == 1
        err = capsys.readouterr().err.splitlines()
        assert 'isoclock chain: line 1: target.mass_g: required key missing' in err
        assert 'isoclock chain: missing section [reactor]: chain needs [target] [reactor]' in err

    def test_missing_file(self, cli, tmp_path, capsys):
        assert cli('chain', str(tmp_path / 'absent.scn')) == 1
        assert capsys.readouterr().err.startswith('isoclock chain: ')

    def test_runtime_error_has_context(self, cli, write_scenario, capsys):
        """Test a target without captures fails with the subcommand named"""
        text = "[target] nuclide=Sr-88 mass_g=1\n[reactor] flux=1e13 duration=1d\n"
        assert cli('chain', str(write_scenario(text))) == 1
        captured = capsys.readouterr()
        assert captured.err.startswith('isoclock chain: ')
        assert captured.out == ''

    def test_zeno_violation(self, cli, write_scenario, capsys):
        text = "[ladder] lifetime_e1=100s lifetime_e2=86ms probe_interval=0.5s perturbation=1e-4 runs=10\n"
        assert cli('jumps', str(write_scenario(text))) == 1
        assert 'ZenoBudgetError' in capsys.readouterr().err


class TestValidate:
    def test_shipped_data(self, cli, capsys):
        assert cli('validate') == 0
        assert capsys.readouterr().out.startswith('validate: ')

    def test_violations_exit_one(self, cli, tmp_path, capsys):
        data = tmp_path / 'bad.dat'
        data.write_text("NUCLIDE Tm-170 z=69 n=101 halflife=128.6d spin=1 moment=0.2476 decay=beta-:Yb-170:1.0\n",
                        encoding='utf-8')
        assert cli('validate', '--nuclides', str(data)) == 1
        assert 'isoclock validate: Tm-170: [dangling-daughter]' in capsys.readouterr().err

    def test_malformed_data_file(self, cli, tmp_path, capsys):
        data = tmp_path / 'broken.dat'
        data.write_text("NUCLIDE Sr-86 z=38 n=48 halflife=soon spin=0 moment=0\n", encoding='utf-8')
        assert cli('validate', '--nuclides', str(data)) == 1
        assert 'DataFileError' in capsys.readouterr().err


class TestRunLedger:
    def test_db_flag_records_run(self, cli, scenario_dir, tmp_path):
        url = f"sqlite:///{tmp_path / 'ledger' / 'runs.db'}"
        out = tmp_path / 'sr87.csv'
        assert cli('chain', str(scenario_dir / 'sr87.scn'), '--out', str(out), '--db', url, '--quiet') == 0
        runs = RunLedger(url).list_runs()
        assert len(runs) == 1
        assert runs[0]['subcommand'] == 'chain'
        assert runs[0]['seed'] == 87
        assert runs[0]['outputs'] == [str(out)]


class TestGoldenOutputs:
    @pytest.mark.parametrize('name', GOLDEN_SCENARIOS)
    def test_reproduces_golden_csv(self, name, cli, scenario_dir, golden_dir, tmp_path):
        """Test a fresh chain run matches the committed CSV byte for byte"""
        golden = golden_dir / f'{name}.csv'
        if not golden.exists():
            pytest.fail(f"{golden} is missing; run scripts/regenerate_golden.py and commit it")
        out = tmp_path / f'{name}.csv'
        assert cli('chain', str(scenario_dir / f'{name}.scn'), '--out', str(out), '--quiet') == 0
        assert out.read_bytes() == golden.read_bytes()

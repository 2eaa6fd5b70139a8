"""Tests for the lyap CLI."""

import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner

from apps.cli import cli
from integrations.emitters import read_csv

CHEBYSHEV = ['--map', 'poly:d=2,c=-2', '--z0', '2', '--max-period', '2']


class TestOrbitCommand:
    """Test the orbit command."""

    def test_orbit_csv(self, tmp_path):
        """Test 21 rows with chi_i = log 4 at the fixed point 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['orbit', *CHEBYSHEV, '--n', '20'])

            assert result.exit_code == 0, result.output
            rows = read_csv(result.stdout)
            assert len(rows) == 21
            assert rows[0]['chi_i'] == '0'
            assert rows[-1]['log_abs_deriv'] == ''
            for row in rows[1:]:
                assert abs(float(row['chi_i']) - math.log(4)) < 1e-12
                assert float(row['delta_i']) == 0.5

    def test_orbit_through_the_critical_point(self, tmp_path):
        """Test z^2 - 0.5 from 0 is written with chi = -inf and delta reaching 0."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['orbit', '--map', 'poly:d=2,c=-0.5', '--z0', '0', '--n', '200'])

            assert result.exit_code == 0, result.output
            rows = read_csv(result.stdout)
            assert len(rows) == 201
            assert rows[0]['log_abs_deriv'] == '-inf'
            assert float(rows[0]['delta_i']) == 0.5
            assert float(rows[1]['re_z']) == -0.5
            assert all(row['chi_i'] == '-inf' for row in rows[1:])
            assert all(float(row['delta_i']) == 0 for row in rows[1:])
            assert abs(float(rows[-1]['re_z']) - (1 - math.sqrt(3)) / 2) < 1e-12

    def test_orbit_output_is_deterministic(self, tmp_path):
        """Test identical bytes across runs, with and without debug logging."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            first = runner.invoke(cli, ['orbit', '--map', 'poly:d=2,c=-2', '--z0', '0.3', '--n', '50'])
            second = runner.invoke(cli, ['-v', 'orbit', '--map', 'poly:d=2,c=-2', '--z0', '0.3', '--n', '50'])

            assert first.exit_code == 0
            assert second.exit_code == 0
            assert first.stdout == second.stdout

    def test_orbit_json_to_file(self, tmp_path):
        """Test JSON output written to --output."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli, ['orbit', *CHEBYSHEV, '--n', '5', '--format', 'json', '--output', 'out/orbit.json']
            )

            assert result.exit_code == 0
            assert result.stdout == ''
            records = json.loads(Path('out/orbit.json').read_text())
            assert [record['i'] for record in records] == list(range(6))
            assert records[-1]['log_abs_deriv'] is None

    def test_config_file(self, tmp_path):
        """Test settings from a key=value config file."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            Path('run.cfg').write_text('map=poly:d=2,c=-2\nz0=2\nn=7\nmax_period=1\n')
            result = runner.invoke(cli, ['--config', 'run.cfg', 'orbit'])

            assert result.exit_code == 0
            assert len(read_csv(result.stdout)) == 8

    def test_malformed_map(self, tmp_path):
        """Test a malformed map spec exits 2 without output."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['orbit', '--map', 'poly:d=one', '--z0', '0'])

            assert result.exit_code == 2
            assert result.stdout == ''
            assert 'Error' in result.stderr

    def test_unknown_config_key(self, tmp_path):
        """Test unknown config keys exit 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            Path('run.cfg').write_text('colour=red\n')
            result = runner.invoke(cli, ['--config', 'run.cfg', 'orbit'])

            assert result.exit_code == 2


class TestTelescopeCommand:
    """Test the telescope command."""

    def test_telescope_json(self, tmp_path):
        """Test the flat telescope at the fixed point 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['telescope', *CHEBYSHEV, '--n', '10', '--format', 'json'])

            assert result.exit_code == 0, result.output
            payload = json.loads(result.stdout)
            assert payload['telescope']['n'] == 10
            assert all(abs(tau - 0.5) < 1e-15 for tau in payload['telescope']['tau'])
            assert payload['tail']['integral'] == 0

    def test_telescope_csv_with_sibling_files(self, tmp_path):
        """Test the tail and regions are written next to --output."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli, ['telescope', *CHEBYSHEV, '--n', '6', '--output', 'tele.csv', '--regions']
            )

            assert result.exit_code == 0, result.output
            rows = read_csv(Path('tele.csv').read_text())
            assert len(rows) == 7
            assert rows[-1]['m_i'] == ''
            tail = json.loads(Path('tele_tail.json').read_text())
            assert tail['n'] == 6
            regions = json.loads(Path('tele_regions.json').read_text())
            assert [region['level'] for region in regions] == list(range(6, -1, -1))


class TestVerifyCommand:
    """Test the verify command."""

    def test_verify_passes(self, tmp_path):
        """Test the report for z^2 - 2 from 2 and exit 0."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['verify', *CHEBYSHEV, '--n', '10'])

            assert result.exit_code == 0, result.output
            report = json.loads(result.stdout)
            assert report['map'] == 'poly:d=2,c=-2'
            assert report['M_f_provenance'] == 'upper_bound'
            assert {claim['claim_id'] for claim in report['claims']} >= {
                'm_max_cutoff', 'packing_bound', 'telescoping_identity', 'abel_identity',
            }
            assert '[OK]' in result.stderr

    def test_verify_refuses_basin(self, tmp_path):
        """Test z^2 - 0.5 from 0 is refused with exit 3."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['verify', '--map', 'poly:d=2,c=-0.5', '--z0', '0', '--n', '10'])

            assert result.exit_code == 3
            payload = json.loads(result.stdout)
            assert payload['passed'] is False
            assert payload['hypothesis_failure'] == 'basin'
            assert payload['cycle']['period'] == 1
            assert abs(payload['cycle']['multiplier'][0] - (1 - math.sqrt(3))) < 1e-8


class TestSweepCommand:
    """Test the sweep command."""

    def test_sweep_needs_a_grid(self, tmp_path):
        """Test neither --n-series nor --c-re exits 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['sweep', *CHEBYSHEV])

            assert result.exit_code == 2

    def test_envelope_sweep(self, tmp_path):
        """Test the envelope over an n-series."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['sweep', *CHEBYSHEV, '--n-series', '10,5'])

            assert result.exit_code == 0, result.output
            rows = read_csv(result.stdout)
            assert [int(row['n']) for row in rows] == [5, 10]
            for row in rows:
                assert float(row['envelope']) == -math.log(40) / int(row['n'])

    def test_envelope_sweep_refuses_basin(self, tmp_path):
        """Test the envelope sweep refuses basin orbits."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli, ['sweep', '--map', 'poly:d=2,c=-0.5', '--z0', '0', '--n-series', '4,8']
            )

            assert result.exit_code == 3

    def test_basin_sweep(self, tmp_path):
        """Test c in {-1, 0, 1} from z0 = 0."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli, ['sweep', '--map', 'poly:d=2,c=0', '--z0', '0', '--c-re', '-1:1:3', '--max-period', '2']
            )

            assert result.exit_code == 0, result.output
            rows = read_csv(result.stdout)
            assert [float(row['c_re']) for row in rows] == [-1.0, 0.0, 1.0]
            assert [row['in_basin'] for row in rows] == ['true', 'true', 'false']
            assert [row['period'] for row in rows] == ['2', '1', '']
            assert rows[2]['reason'] == 'orbit escaped'


class TestCyclesAndLambda:
    """Test the cycles and lambda-table commands."""

    def test_cycles(self, tmp_path):
        """Test cycles of z^2 - 2 up to period 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['cycles', '--map', 'poly:d=2,c=-2', '--max-period', '2'])

            assert result.exit_code == 0, result.output
            records = json.loads(result.stdout)
            assert [record['period'] for record in records] == [1, 1, 2]
            assert abs(records[0]['points'][0][0] + 1) < 1e-12

    def test_lambda_table(self, tmp_path):
        """Test brackets on a three-point log grid."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['lambda-table', '--r-min', '2', '--r-max', '8', '--count', '3'])

            assert result.exit_code == 0, result.output
            rows = read_csv(result.stdout)
            assert [float(row['R']) for row in rows] == pytest.approx([2.0, 4.0, 8.0])
            assert float(rows[0]['lambda_lower']) == math.log(32)
            assert float(rows[2]['lambda_upper']) == math.log(144)

    def test_lambda_table_json(self, tmp_path):
        """Test JSON records."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['lambda-table', '--count', '5', '--format', 'json'])

            assert result.exit_code == 0
            records = json.loads(result.stdout)
            assert len(records) == 5
            assert all(r['lambda_lower'] < r['lambda_upper'] for r in records)

    def test_lambda_table_domain(self, tmp_path):
        """Test r-min <= 1 exits 2."""
        runner = CliRunner()

        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ['lambda-table', '--r-min', '1'])

            assert result.exit_code == 2

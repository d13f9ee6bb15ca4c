#!/usr/bin/env python3
"""
End-to-end tests of the experiment runner
"""
import csv
import io
import json

import pytest

from config_manager import ConfigManager
from run_experiments import CSV_COLUMNS, build_parser, main


def run_json(capsys, *argv):
    assert main(list(argv) + ['--no-progress']) == 0
    return json.loads(capsys.readouterr().out)


def test_rates_for_a_star_to_zero_measure(capsys):
    document = run_json(capsys, 'rates', '--lambda0', 'dirac:1:1', '--b', '5')
    assert document['command'] == 'rates'
    assert document['config']['lambda0'] == 'dirac:1:1'
    r_rows = {(row['b'], row['k']): row['rate'] for row in document['rows'] if row['kind'] == 'r'}
    assert r_rows[(5, 5)] == 1.0
    assert all(rate == 0.0 for (b, k), rate in r_rows.items() if k < b)


def test_cdi_check_verdicts(capsys):
    document = run_json(capsys, 'cdi-check', '--lambda1', 'uniform:1', '--depth', '2000')
    assert document['verdict']['verdict'] == 'DoesNotComeDown'
    document = run_json(capsys, 'cdi-check', '--lambda1', 'dirac0:1', '--depth', '2000')
    assert document['verdict']['verdict'] == 'ComesDown'


def test_fixation_for_kingman(capsys):
    document = run_json(capsys, 'fixation', '--lambda0', 'dirac0:1', '--lambda1', 'dirac0:1',
                        '--n', '50', '--replicas', '2000', '--seed', '7')
    assert document['bound']['bound'] == pytest.approx(2.0, abs=1e-9)
    assert document['unfixed'] == 0
    assert document['monte_carlo']['count'] == 2000
    assert document['mean_within_bound'] is True


def test_simulations_need_a_seed(capsys):
    assert main(['simulate', '--lambda1', 'dirac0:1', '--no-progress']) == 2
    assert capsys.readouterr().out == ''


@pytest.mark.parametrize("argv", [
    ['rates', '--lambda1', 'gauss:1'],
    ['rates', '--lambda1', 'dirac:0:1'],
    ['simulate', '--lambda1', 'dirac0:1', '--seed', '1', '--replicas', '0'],
    ['cdi-check', '--lambda1', '0', '--lambda0', 'uniform:1', '--depth', '-1'],
    ['gfvi', '--lambda1', 'uniform:1', '--seed', '1'],
])
def test_invalid_inputs_exit_with_status_two(argv, capsys):
    assert main(argv + ['--no-progress']) == 2
    assert capsys.readouterr().out == ''


def test_lambda_and_nu_flags_are_exclusive():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['rates', '--lambda1', 'dirac0:1', '--nu1', 'dirac:0.5:4'])


def test_nu_flags_describe_the_same_coalescent(capsys):
    via_lambda = run_json(capsys, 'rates', '--lambda1', 'dirac:0.5:1', '--b', '4')
    via_nu = run_json(capsys, 'rates', '--nu1', 'dirac:0.5:4', '--b', '4')
    for a, b in zip(via_lambda['rows'], via_nu['rows']):
        assert a['rate'] == pytest.approx(b['rate'])


def test_simulation_output_is_reproducible(capsys):
    argv = ['simulate', '--lambda0', 'dirac0:1', '--lambda1', 'uniform:1', '--n', '6',
            '--replicas', '3', '--seed', '11', '--no-progress']
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    document = json.loads(first)
    assert len(document['trajectories']) == 3
    assert all(traj['absorbed'] for traj in document['trajectories'])


def test_csv_output(capsys):
    assert main(['simulate', '--lambda1', 'dirac0:1', '--lambda0', 'dirac0:1', '--n', '4',
                 '--seed', '3', '--format', 'csv', '--no-progress']) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == ','.join(CSV_COLUMNS['simulate'])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows[0]['count'] == '4'
    assert rows[-1]['count'] == '0'


def test_out_file(tmp_path, capsys):
    target = tmp_path / 'dust.json'
    assert main(['dust', '--c0', '1', '--mixture', '0.2;0.3@1', '--t', '0.5', '--replicas', '200',
                 '--seed', '5', '--out', str(target), '--no-progress']) == 0
    assert capsys.readouterr().out == ''
    document = json.loads(target.read_text())
    assert document['summary']['laplace_exponent'] == pytest.approx(1.5)


def test_gfvi_and_duality_artifacts(capsys):
    document = run_json(capsys, 'gfvi', '--lambda0', 'dirac:1:1', '--t', '2',
                        '--sample-times', '0.5,1', '--seed', '4')
    states = document['trajectories'][0]['states']
    assert [state['t'] for state in states] == [0.5, 1.0]

    document = run_json(capsys, 'duality', '--lambda0', 'dirac:0.5:1', '--lambda1', 'dirac:0.4:1',
                        '--p', '2', '--f', 'prod', '--t', '0.5', '--replicas', '500',
                        '--seed', '9')
    assert document['report']['z_score'] <= 4


def test_bridge_test_artifact(capsys):
    document = run_json(capsys, 'bridge-test', '--x1', '0.5', '--y2', '0.5', '--n', '2',
                        '--replicas', '2000', '--seed', '1')
    report = document['report']
    assert report['distance'] <= 0.05
    assert sum(report['exact_law'].values()) == pytest.approx(1.0)


def write_config(**values):
    manager = ConfigManager()
    config = manager.get_config()
    config.update(values)
    assert manager.save_config(config)


def test_artifact_embeds_the_full_resolved_config(capsys, monkeypatch):
    write_config(ratio_threshold=0.5, decisive_windows=3, lebesgue_nodes=4)
    monkeypatch.setenv("MCOAL_WINDOWS", "6")
    document = run_json(capsys, 'cdi-check', '--lambda1', 'uniform:1', '--depth', '500')
    config = document['config']
    assert config['ratio_threshold'] == 0.5
    assert config['decisive_windows'] == 3
    assert config['lebesgue_nodes'] == 4
    assert config['windows'] == 6
    assert config['depth'] == 500
    assert config['show_progress'] is False
    assert config['quad_tolerance'] == 1e-10
    assert config['quad_max_subdivisions'] == 1000000
    assert 'windows' not in config['extra']
    assert set(ConfigManager().get_config()) <= set(config)


def test_quadrature_cap_exits_with_status_three(capsys):
    write_config(quad_max_subdivisions=1)
    assert main(['cdi-check', '--lambda1', 'uniform:1', '--depth', '100', '--no-progress']) == 3
    captured = capsys.readouterr()
    assert captured.out == ''
    assert "Numerical cap exceeded" in captured.err
    assert "more than 1 subdivisions" in captured.err


def test_unwritable_out_path_exits_with_status_two(tmp_path, capsys):
    target = tmp_path / 'missing' / 'rates.json'
    assert main(['rates', '--lambda1', 'dirac0:1', '--b', '3', '--out', str(target),
                 '--no-progress']) == 2
    assert not target.exists()
    assert "Could not write" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ['bridge-test', '--x1', '0.4', '--y2', '0.3', '--n', '3', '--replicas', '300', '--seed', '8'],
    ['duality', '--lambda0', 'dirac:0.5:1', '--lambda1', 'dirac:0.4:1', '--p', '2', '--f', 'sum',
     '--t', '0.5', '--replicas', '50', '--seed', '8'],
])
def test_replica_stream_commands_are_reproducible(argv, capsys):
    first = run_json(capsys, *argv)
    assert run_json(capsys, *argv) == first
    assert first['config']['seed'] == 8

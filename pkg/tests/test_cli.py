"""
Testes da interface de linha de comando
"""

import logging

import pytest

from cli import build_parser, exit_code_for, main
from errors import (BudgetExceeded, ConfigError, ExperimentAborted, NotCritical, PrecisionExhausted,
                    ReplicateError, TooLarge)
from tree import read_binary


@pytest.fixture(autouse=True)
def _restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


class TestExitCodes:

    @pytest.mark.parametrize('error, code', [
        (ConfigError('x'), 2),
        (TooLarge('x'), 2),
        (NotCritical('x'), 2),
        (OSError('x'), 2),
        (BudgetExceeded('nós', 1), 3),
        (ExperimentAborted('x'), 3),
        (PrecisionExhausted(4), 3),
        (ReplicateError(10, 1, BudgetExceeded('nós', 1)), 3),
        (ReplicateError(10, 1, ValueError('x')), 2),
    ])
    def test_mapping(self, error, code):
        assert exit_code_for(error) == code


class TestExact:

    def test_catalan_row(self, capsys):
        assert main(['exact', '--dist', 'catalan', '--stat', 'hs', '--xmax', '3']) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'x,q,survival'
        assert lines[2] == '1,0.25,0.5'

    def test_ternary_rigid_at_default_precision(self, capsys):
        assert main(['exact', '--dist', 'pmf:2/3,0,0,1/3', '--stat', 'rigid', '--xmax', '12']) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 14
        assert lines[-1].startswith('12,')

    def test_precision_exhausted(self):
        argv = ['exact', '--dist', 'pmf:2/3,0,0,1/3', '--stat', 'rigid', '--xmax', '40', '--bits', '256']
        assert main(argv) == 3

    def test_unknown_distribution(self):
        assert main(['exact', '--dist', 'nosuch', '--stat', 'hs', '--xmax', '3']) == 2

    def test_non_critical(self):
        assert main(['exact', '--dist', 'pmf:0.5,0.5', '--stat', 'hs', '--xmax', '3']) == 2

    def test_file_output_and_cache(self, tmp_path, capsys):
        db = str(tmp_path / 'tables.db')
        out = tmp_path / 'hs.csv'
        argv = ['--log-level', 'INFO', 'exact', '--dist', 'catalan', '--stat', 'hs', '--xmax', '5',
                '--out', str(out), '--cache', db]
        assert main(argv) == 0
        first = out.read_text(encoding='utf-8')
        assert (tmp_path / 'hs.csv.json').exists()

        assert main(argv) == 0
        assert out.read_text(encoding='utf-8') == first
        assert 'recuperada do cache' in capsys.readouterr().err


class TestSample:

    def test_stats(self, capsys):
        argv = ['sample', '--dist', 'catalan', '--n', '50', '--count', '3', '--seed', '1',
                '--stats', 'hs,rigid,hsstar']
        assert main(argv) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'index,size,hs,rigid,hsstar'
        assert len(lines) == 4
        for i, line in enumerate(lines[1:]):
            index, size, hs, rigid, hsstar = (int(v) for v in line.split(','))
            assert index == i
            assert size == 50
            assert rigid <= hs <= hsstar

    def test_deterministic(self, capsys):
        argv = ['sample', '--dist', 'catalan', '--n', '30', '--count', '5', '--seed', '9', '--format', 'csv']
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first
        assert len(first.splitlines()) == 5

    def test_binary(self, tmp_path):
        out = tmp_path / 'trees.bin'
        argv = ['sample', '--dist', 'full-binary', '--n', '11', '--count', '4', '--format', 'binary',
                '--out', str(out)]
        assert main(argv) == 0
        with open(out, 'rb') as f:
            trees = list(read_binary(f))
        assert [t.n for t in trees] == [11] * 4

    def test_kesten(self, capsys):
        argv = ['sample', '--dist', 'pmf:2/3,0,0,1/3', '--sampler', 'kesten', '--ell', '2', '--count', '2']
        assert main(argv) == 0
        assert len(capsys.readouterr().out.splitlines()) == 3

    def test_missing_size(self):
        assert main(['sample', '--dist', 'catalan']) == 2
        assert main(['sample', '--dist', 'catalan', '--sampler', 'kesten']) == 2

    def test_infeasible_size(self):
        assert main(['sample', '--dist', 'full-binary', '--n', '4']) == 2


class TestEnumerate:

    def test_catalan_three(self, capsys):
        assert main(['enumerate', '--dist', 'catalan', '--n', '3']) == 0
        assert capsys.readouterr().out == '0,0.8\n1,0.2\n'

    def test_trees_file(self, tmp_path):
        out = tmp_path / 'trees.csv'
        assert main(['enumerate', '--dist', 'full-binary', '--n', '7', '--trees', str(out)]) == 0
        lines = out.read_text(encoding='utf-8').splitlines()
        assert lines[0] == 'degrees,log_weight'
        assert len(lines) == 6

    def test_too_large(self):
        assert main(['enumerate', '--dist', 'catalan', '--n', '17']) == 2


class TestConstants:

    def test_catalan(self, capsys):
        assert main(['constants', '--dist', 'catalan']) == 0
        assert capsys.readouterr().out.splitlines() == [
            'mean,1.0', 'variance,0.5', 'period,1', 'd,2', 'gamma,2.0',
        ]

    def test_without_branching(self, capsys):
        assert main(['constants', '--dist', 'pmf:1']) == 0
        lines = capsys.readouterr().out.splitlines()
        assert 'd,' in lines
        assert 'gamma,' in lines


class TestExperiment:

    def _write_config(self, tmp_path):
        path = tmp_path / 'exp.toml'
        path.write_text(
            'dist = "catalan"\n'
            'statistics = ["hs", "rigid"]\n'
            'sizes = [16, 32]\n'
            'replicates = 10\n'
            'seed = 5\n',
            encoding='utf-8',
        )
        return path

    def test_run(self, tmp_path, capsys):
        config = self._write_config(tmp_path)
        out = tmp_path / 'results.csv'
        assert main(['experiment', '--config', str(config), '--threads', '2', '--out', str(out),
                     '--report']) == 0
        lines = out.read_text(encoding='utf-8').splitlines()
        assert len(lines) == 5
        assert 'RELATÓRIO' in capsys.readouterr().err

    def test_invalid_thread_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv('STRAHLER_THREADS', 'x')
        assert main(['experiment', '--config', str(self._write_config(tmp_path))]) == 2

    def test_missing_config(self, tmp_path):
        assert main(['experiment', '--config', str(tmp_path / 'nope.toml')]) == 2


class TestParser:

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(['exact', '--dist', 'catalan']) == 2
        assert main(['sample', '--dist', 'catalan', '--n', 'ten']) == 2

    def test_help(self, capsys):
        assert main(['exact', '--help']) == 0
        out = capsys.readouterr().out
        for flag in ('--dist', '--stat', '--xmax', '--bits', '--out', '--no-transform', '--cache'):
            assert flag in out

    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(['experiment', '--config', 'x.toml'])
        assert args.command == 'experiment'
        assert args.threads is None

    def test_version(self, capsys):
        assert main(['--version']) == 0
        assert '1.0.0' in capsys.readouterr().out

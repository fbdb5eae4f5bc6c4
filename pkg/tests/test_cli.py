import json

import pytest

import burgers


def run(capsys, *argv):
    code = burgers.main(list(argv))
    return code, capsys.readouterr().out


def test_verify_reports_a_proven_symmetry(capsys):
    code, out = run(capsys, 'verify', '--f', 'Phi(u)', '--g', 'Psi(u)', '--vf', '{"x": "1"}')
    assert code == 0
    report = json.loads(out)
    assert report['verdict'] == 'proven-symmetry'
    assert report['numeric_max'] < 1e-6


def test_refuted_candidate_exits_with_failure(capsys):
    code, _ = run(capsys, 'verify', '--vf', 'x=1')
    assert code == 1


@pytest.mark.parametrize('argv', [
    ['verify', '--vf', 'x=u +* 1'],
    ['verify', '--vf', '{"x": '],
    ['verify', '--f', 't*u', '--vf', 't=1'],
    ['bracket', '--v', 't=1', '--w', 'x=undeclared'],
])
def test_invalid_input_exits_with_usage_error(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 2
    assert out == ''


def test_bracket_prints_the_field(capsys):
    code, out = run(capsys, 'bracket', '--v', 't=1', '--w', 't=t; x=x', '--format', 'md')
    assert code == 0
    assert out.strip() == '(1)*d_t'


def test_detsys_output_is_deterministic(capsys):
    first = run(capsys, 'detsys')
    second = run(capsys, 'detsys')
    assert first == second
    assert first[0] == 0
    assert len(json.loads(first[1])['system']['residuals']) == 10


def test_printed_comparison_flags_errata(capsys):
    code, out = run(capsys, 'detsys', '--compare-paper')
    assert code == 1
    printed = json.loads(out)['printed']
    assert {'determining_equation', 'ux_split', 'system'} <= set(printed)


def test_report_is_written_to_the_output_path(capsys, tmp_path):
    path = tmp_path / 'nested' / 'bracket.json'
    code, out = run(capsys, 'bracket', '--chart', 'equiv', '--v', 'u=1', '--w', 'u=u; g=-g',
                    '--output', str(path))
    assert code == 0
    assert out.strip() == f'bracket: pass, report written to {path}'
    assert json.loads(path.read_text())['bracket']['coeffs'] == {'u': '1'}


def test_probable_verdict_exits_with_failure(capsys):
    code, out = run(capsys, 'verify', '--f', '0', '--g', 'u', '--vf', 'u=ln(u^2) - 2*ln(u)')
    assert code == 1
    report = json.loads(out)
    assert report['verdict'] == 'probable'
    assert 'numeric_max' not in report


def test_unwritable_output_exits_with_usage_error(capsys, tmp_path):
    blocker = tmp_path / 'report.json'
    blocker.write_text('')
    code, out = run(capsys, 'bracket', '--v', 't=1', '--w', 'x=x',
                    '--output', str(blocker / 'bracket.json'))
    assert code == 2
    assert out == ''


def test_options_are_accepted_before_the_subcommand(capsys):
    assert run(capsys, '--format', 'md', 'bracket', '--v', 't=1', '--w', 't=t')[1].strip() == '(1)*d_t'


def test_commutator_table_renders_as_markdown(capsys):
    code, out = run(capsys, 'table', 'commutators', '--format', 'md')
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith('|')
    assert len(lines) == 12
    assert 'X10 - X7' in out or '-X7 + X10' in out


@pytest.mark.slow
def test_classification_report_as_json(capsys):
    code, out = run(capsys, 'classify', 'report', '--format', 'json', '--samples', '20')
    report = json.loads(out)
    assert report['summary']['rows'] == 27
    assert len(report['rows']) == 27
    assert code == (0 if report['summary']['passed'] == 27 else 1)


def test_saved_reports_are_named_after_the_command(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(burgers.config, 'output_dir', str(tmp_path))
    code, _ = run(capsys, 'table', 'commutators', '--algebra', 'ibe', '--save')
    assert code == 0
    assert [p.name for p in tmp_path.iterdir()] == ['table-commutators-ibe.json']

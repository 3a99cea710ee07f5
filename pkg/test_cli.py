"""
SCBench 프로젝트 - 명령행/실행 기록 테스트
"""

import json
import os

import numpy as np
import pandas as pd
import pytest

from main import build_parser, main, resolve_options
from src.database.manager import DatabaseManager
from src.utils.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')


def write_spec(path, text):
    path.write_text(text)
    return str(path)


def read_bytes(path):
    with open(path, 'rb') as f:
        return f.read()


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert 'encode-demo' in capsys.readouterr().out


def test_encode_demo(isolated_env, capsys):
    assert main(['encode-demo', '0.5', '--format', 'unipolar']) == 0
    out = capsys.readouterr().out
    assert 'popcount: 32/64' in out
    assert '디코딩: 0.500000' in out


def test_encode_demo_out_of_range(isolated_env):
    assert main(['encode-demo', '1.5']) == 4


def test_sweep_writes_artifacts_and_manifest(isolated_env):
    out_dir = isolated_env / 'hist'
    assert main(['sweep', os.path.join(CONFIG_DIR, 'sweep_histogram.env'), '-o', str(out_dir)]) == 0
    assert (out_dir / 'esl-histogram.csv').exists()
    with open(out_dir / 'manifest.json', encoding='utf-8') as f:
        manifest = json.load(f)
    assert manifest['command'] == 'sweep'
    assert {a['path'] for a in manifest['artifacts']} == {'esl-histogram.csv', 'esl-histogram.json'}


def test_sweep_is_reproducible(isolated_env):
    spec = write_spec(isolated_env / 'sng.env',
                      'EXPERIMENT=sng-error\nSN_EXPONENTS=6,7\nINPUT_RANGE=-2,2\nGRID_POINTS=5\nTRIALS=30\nSEED=3\n')
    first, second = isolated_env / 'a', isolated_env / 'b'
    assert main(['sweep', spec, '-o', str(first)]) == 0
    assert main(['sweep', spec, '-o', str(second), '--jobs', '2']) == 0
    assert read_bytes(first / 'sng-error.csv') == read_bytes(second / 'sng-error.csv')

    db = DatabaseManager(str(isolated_env / 'runs.db'))
    runs = db.get_recent_runs(10)
    assert len(runs) == 2
    assert runs[0]['spec_hash'] == runs[1]['spec_hash']
    assert len(db.find_runs_by_hash(runs[0]['spec_hash'])) == 2
    db.close()


def test_sweep_seed_flag_changes_output(isolated_env):
    spec = write_spec(isolated_env / 'sng.env', 'EXPERIMENT=sng-error\nSN_EXPONENTS=6\nGRID_POINTS=3\nTRIALS=20\n')
    assert main(['sweep', spec, '-o', str(isolated_env / 'a'), '--seed', '1']) == 0
    assert main(['sweep', spec, '-o', str(isolated_env / 'b'), '--seed', '2']) == 0
    assert read_bytes(isolated_env / 'a' / 'sng-error.csv') != read_bytes(isolated_env / 'b' / 'sng-error.csv')


def test_sweep_unknown_experiment(isolated_env):
    spec = write_spec(isolated_env / 'bad.env', 'EXPERIMENT=noise-floor\n')
    assert main(['sweep', spec, '-o', str(isolated_env / 'bad')]) == 2
    assert not (isolated_env / 'bad' / 'manifest.json').exists()

    db = DatabaseManager(str(isolated_env / 'runs.db'))
    stats = db.get_statistics()
    assert stats['failed_runs'] == 1
    db.close()


def test_compare_reported(isolated_env, capsys):
    out_dir = isolated_env / 'cmp'
    assert main(['compare', '--reported', '-o', str(out_dir)]) == 0
    frame = pd.read_csv(out_dir / 'comparison.csv')
    speedups = dict(zip(frame['backend'], frame['speedup_vs_bisc']))
    assert speedups['esl-raw'] == pytest.approx(47.6, rel=0.01)
    assert speedups['esl-convert'] == pytest.approx(50.6, rel=0.01)
    assert '113.8x' in capsys.readouterr().out


def test_compare_reported_with_pu_config(isolated_env):
    out_dir = isolated_env / 'cmp'
    pu_config = os.path.join(CONFIG_DIR, 'pu_reference.env')
    assert main(['compare', '--reported', '--pu-config', pu_config, '-o', str(out_dir)]) == 0
    with open(out_dir / 'comparison.json', encoding='utf-8') as f:
        payload = json.load(f)
    assert payload['metadata']['esl_footprint_ratio'] == pytest.approx(128 / 6)


def test_lenet_on_synthetic_model(isolated_env):
    out_dir = isolated_env / 'lenet'
    assert main(['lenet', '--backend', 'bisc', '--limit', '10', '-o', str(out_dir)]) == 0
    with open(out_dir / 'accuracy_bisc.json', encoding='utf-8') as f:
        payload = json.load(f)
    assert 0.0 <= payload['accuracy'] <= 1.0
    assert payload['metadata']['images'] == 10
    cycles = pd.read_csv(out_dir / 'cycles_bisc.csv')
    assert cycles['layer'].iloc[-1] == 'total'
    assert cycles['cycles'].iloc[-1] == cycles['cycles'].iloc[:-1].sum()


def test_lenet_missing_weights(isolated_env):
    code = main(['lenet', '--weights', str(isolated_env / 'none.scnw'), '--mnist-dir', str(isolated_env)])
    assert code == 3


def test_lenet_requires_both_paths(isolated_env):
    assert main(['lenet', '--weights', str(isolated_env / 'none.scnw')]) == 2


def test_import_weights(isolated_env, capsys):
    source = str(isolated_env / 'small.npz')
    rng = np.random.default_rng(0)
    np.savez(source, **{
        'conv1.weight': rng.normal(size=(6, 1, 5, 5)), 'conv1.bias': np.zeros(6),
        'conv2.weight': rng.normal(size=(16, 6, 5, 5)), 'conv2.bias': np.zeros(16),
        'conv3.weight': rng.normal(size=(120, 16, 5, 5)), 'conv3.bias': np.zeros(120),
        'fc.weight': rng.normal(size=(10, 120)), 'fc.bias': np.zeros(10),
    })
    output = isolated_env / 'out' / 'weights.scnw'
    assert main(['import-weights', source, '--output', str(output)]) == 0
    assert output.exists()
    assert 'MAC 수: 406,800' in capsys.readouterr().out


def test_stats(isolated_env, capsys):
    main(['encode-demo', '0.25'])
    main(['compare', '--reported', '-o', str(isolated_env / 'cmp')])
    assert main(['stats']) == 0
    assert 'compare: 1회' in capsys.readouterr().out


def test_config_file_precedence(isolated_env):
    run_config = write_spec(isolated_env / 'run.env', 'SEED=5\nJOBS=2\nBACKEND=esl-raw\n')
    parser = build_parser()
    options = resolve_options(parser.parse_args(['lenet', '--config', run_config]))
    assert (options['seed'], options['jobs'], options['backend']) == (5, 2, 'esl-raw')

    options = resolve_options(parser.parse_args(['lenet', '--config', run_config, '--seed', '9', '-b', 'bisc']))
    assert (options['seed'], options['backend']) == (9, 'bisc')

    options = resolve_options(parser.parse_args(['lenet']))
    assert options['seed'] == 7
    assert options['out_dir'] == str(isolated_env / 'results')


def test_invalid_options(isolated_env):
    parser = build_parser()
    with pytest.raises(ConfigError):
        resolve_options(parser.parse_args(['lenet', '--jobs', '0']))
    bad = write_spec(isolated_env / 'bad.env', 'BACKEND=analog\n')
    with pytest.raises(ConfigError):
        resolve_options(parser.parse_args(['lenet', '--config', bad]))
    assert main(['lenet', '--config', str(isolated_env / 'missing.env')]) == 2

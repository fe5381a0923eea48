import json
import os

import numpy as np
import pytest

from siclab.core.utils import (DEFAULT_CATALOG_PATH, _replace_env_vars, complex_to_pairs, config_value,
                               dumps_json, ensure_dir_exists, format_float, format_json_float, is_unresolved,
                               load_config, load_data, load_env_file, load_yaml_file, pairs_to_complex,
                               resolve_catalog_path, save_data)


def test_replace_env_vars(monkeypatch):
    monkeypatch.setenv('SICLAB_TEST_DIR', '/tmp/sic')
    monkeypatch.delenv('SICLAB_TEST_UNSET', raising=False)
    data = {'a': '${SICLAB_TEST_DIR}/cat.json', 'b': ['${SICLAB_TEST_UNSET}', 3], 'c': None}
    out = _replace_env_vars(data)
    assert out['a'] == '/tmp/sic/cat.json'
    assert out['b'] == ['${SICLAB_TEST_UNSET}', 3]
    assert out['c'] is None
    assert is_unresolved(out['b'][0])
    assert not is_unresolved(out['a'])


def test_load_env_file(tmp_path, monkeypatch):
    monkeypatch.delenv('SICLAB_ENV_A', raising=False)
    monkeypatch.setenv('SICLAB_ENV_B', 'kept')
    path = tmp_path / '.env'
    path.write_text('# comment\nexport SICLAB_ENV_A="one"\nSICLAB_ENV_B=two\nnot a pair\n')
    assert load_env_file(str(path)) == 1
    assert os.environ['SICLAB_ENV_A'] == 'one'
    assert os.environ['SICLAB_ENV_B'] == 'kept'
    assert load_env_file(str(tmp_path / 'missing.env')) == 0


def test_load_yaml_file(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text('search:\n  restarts: 12\n')
    assert load_yaml_file(str(path)) == {'search': {'restarts': 12}}
    assert load_yaml_file(str(path), 'search.restarts') == 12
    with pytest.raises(KeyError):
        load_yaml_file(str(path), 'search.seed')
    with pytest.raises(FileNotFoundError):
        load_yaml_file(str(tmp_path / 'nope.yaml'))
    bad = tmp_path / 'bad.yaml'
    bad.write_text('search: [1, 2\n')
    with pytest.raises(ValueError):
        load_yaml_file(str(bad))


def test_project_config_defaults():
    config = load_config()
    assert config_value(config, 'galois.exhaustive_dbar_limit') == 40
    assert config_value(config, 'tolerances.sic') == pytest.approx(1e-9)


def test_config_value():
    config = {'search': {'seed': 0, 'workers': None}, 'catalog': {'path': '${SICLAB_NOT_SET_ANYWHERE}'}}
    assert config_value(config, 'search.seed', 5) == 0
    assert config_value(config, 'search.workers', 1) == 1
    assert config_value(config, 'search.missing', 'x') == 'x'
    assert config_value(config, 'search.seed.deeper', 'x') == 'x'
    assert config_value(config, 'catalog.path', 'fallback') == 'fallback'


def test_resolve_catalog_path(monkeypatch):
    monkeypatch.delenv('SICLAB_CATALOG', raising=False)
    config = {'catalog': {'path': 'from_config.json'}}
    assert resolve_catalog_path(None, {}) == DEFAULT_CATALOG_PATH
    assert resolve_catalog_path(None, config) == 'from_config.json'
    monkeypatch.setenv('SICLAB_CATALOG', 'from_env.json')
    assert resolve_catalog_path(None, config) == 'from_env.json'
    assert resolve_catalog_path('flag.json', config) == 'flag.json'


def test_save_and_load_data(tmp_path):
    path = tmp_path / 'nested' / 'dir' / 'data.json'
    save_data([{'d': 3}], str(path))
    assert load_data(str(path)) == [{'d': 3}]
    assert path.read_text().endswith('\n')
    broken = tmp_path / 'broken.json'
    broken.write_text('{"d": ')
    with pytest.raises(ValueError):
        load_data(str(broken))


def test_ensure_dir_exists(tmp_path):
    target = tmp_path / 'a' / 'b'
    ensure_dir_exists(str(target))
    ensure_dir_exists(str(target))
    ensure_dir_exists('')
    assert target.is_dir()


def test_complex_pairs():
    z = np.array([1 + 2j, -0.5j])
    pairs = complex_to_pairs(z)
    assert pairs == [[1.0, 2.0], [0.0, -0.5]]
    np.testing.assert_array_equal(pairs_to_complex(pairs), z)
    np.testing.assert_array_equal(pairs_to_complex([1, 0.5]), np.array([1, 0.5], dtype=complex))
    with pytest.raises(ValueError):
        pairs_to_complex([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        pairs_to_complex(['x'])


def test_format_float():
    assert format_float(0.1) == '0.10000000000000001'
    assert format_float(2.0) == '2'


def test_format_json_float():
    assert format_json_float(0.1) == '0.10000000000000001'
    assert format_json_float(2.0) == '2.0'
    assert format_json_float(1e-20) == '9.9999999999999995e-21'
    assert format_json_float(float('nan')) == 'NaN'


def test_dumps_json_writes_seventeen_digits():
    data = {'a': 0.1, 'b': [1.0, {'c': -0.5}], 'n': 3, 'ok': True, 's': 'x', 'e': {}, 'l': [], 'z': None}
    text = dumps_json(data)
    assert '"a": 0.10000000000000001' in text
    assert '"n": 3,' in text
    assert json.loads(text) == data
    assert dumps_json({'k': [1, 2]}) == '{\n  "k": [\n    1,\n    2\n  ]\n}'
    assert dumps_json({'k': [1, 2]}) == json.dumps({'k': [1, 2]}, indent=2)

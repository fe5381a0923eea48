import json

import pytest

from siclab.interface.cli import EXIT_BAD_INPUT, EXIT_FAILED, EXIT_OK, build_parser, main, parse_args_and_get_config


def run_json(capsys, *argv):
    code = main(list(argv) + ['--json'])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def basis_vector_file(tmp_path):
    path = tmp_path / 'e0.json'
    path.write_text(json.dumps([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]))
    return str(path)


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parameters_prefer_flags(catalog_path):
    args, _, parameters = parse_args_and_get_config(['search', '--d', '3', '--restarts', '5', '--seed', '0'])
    assert args.command == 'search'
    assert parameters['restarts'] == 5
    assert parameters['seed'] == 0
    assert parameters['max_iters'] == 2000
    assert parameters['catalog_path'] == str(catalog_path)


def test_catalog_file_flag_wins(catalog_path, tmp_path):
    other = str(tmp_path / 'other.json')
    _, _, parameters = parse_args_and_get_config(['orbits', '--d', '4', '--catalog-file', other])
    assert parameters['catalog_path'] == other
    assert parameters['dbar_limit'] == 40


def test_verify_family(capsys, catalog_path):
    code, report = run_json(capsys, 'verify', '--d', '3', '--family-t', '0.1')
    assert code == EXIT_OK
    assert report['passed'] is True
    assert report['overlap_summary']['expected_abs_sq'] == 0.25


def test_verify_builtin_catalog(capsys, catalog_path):
    code, report = run_json(capsys, 'verify', '--d', '4', '--catalog', 'bengtsson')
    assert code == EXIT_OK
    assert report['worst_residual'] < 1e-12


def test_verify_failing_vector(capsys, catalog_path, basis_vector_file):
    code, report = run_json(capsys, 'verify', '--d', '3', '--vector', basis_vector_file)
    assert code == EXIT_FAILED
    assert report['passed'] is False
    assert report['worst_residual'] == pytest.approx(0.75)


def test_verify_tolerance_flag(capsys, catalog_path, basis_vector_file):
    code, _ = run_json(capsys, 'verify', '--d', '3', '--vector', basis_vector_file, '--tol', '0.8')
    assert code == EXIT_OK


def test_verify_human_output(capsys, catalog_path):
    assert main(['verify', '--d', '3', '--catalog', 'hesse']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'passed: True' in out
    assert 'overlap_summary:' in out


@pytest.mark.parametrize('argv', [
    ['verify', '--d', '4', '--vector', 'MISSING'],
    ['verify', '--d', '3', '--family-t', '4.0'],
    ['verify', '--d', '5'],
    ['verify', '--d', '4', '--family-t', '0.1'],
    ['verify', '--d', '4', '--catalog', 'hesse'],
    ['verify'],
    ['fieldinfo', '--d', '3'],
    ['orbits', '--d', '24'],
    ['moment', '--d', '4', '--subgroup', '2,2'],
    ['selftest', '--d-min', '5', '--d-max', '4'],
])
def test_bad_input_exit_code(argv, catalog_path):
    assert main(argv) == EXIT_BAD_INPUT


def test_verify_rejects_wrong_length(tmp_path, catalog_path):
    path = tmp_path / 'short.json'
    path.write_text(json.dumps([[1.0, 0.0], [0.0, 0.0]]))
    assert main(['verify', '--d', '3', '--vector', str(path)]) == EXIT_BAD_INPUT


def test_verify_accepts_record_file(tmp_path, capsys, catalog_path):
    from siclab.core.fiducials import exact_fiducial_d4
    path = tmp_path / 'record.json'
    path.write_text(json.dumps(exact_fiducial_d4().to_dict()))
    code, report = run_json(capsys, 'verify', '--d', '4', '--vector', str(path))
    assert code == EXIT_OK
    assert report['source'] == 'exact-catalog'


def test_overlap_table(capsys, catalog_path):
    code, data = run_json(capsys, 'overlap', '--d', '3', '--catalog', 'hesse')
    assert code == EXIT_OK
    assert data['dbar'] == 3
    assert len(data['values']) == 9
    assert data['values'][1] == pytest.approx([-0.5, 0.0])


def test_orbits(capsys, catalog_path):
    code, data = run_json(capsys, 'orbits', '--d', '7')
    assert code == EXIT_OK
    assert data['orbit_count'] == 4
    assert data['divisor_count'] == 4
    assert data['match'] is True


def test_orbits_type_a(capsys, catalog_path):
    code, data = run_json(capsys, 'orbits', '--d', '12')
    assert code == EXIT_OK
    assert data['type'] == 'a4'
    assert data['algebraic_type_a']['orbit_count'] == 16


@pytest.mark.parametrize('d, D, ftype', [(4, 5, 'z'), (19, 5, 'z'), (30, 93, 'a6'), (12, 13, 'a4')])
def test_fieldinfo(capsys, catalog_path, d, D, ftype):
    code, data = run_json(capsys, 'fieldinfo', '--d', str(d))
    assert code == EXIT_OK
    assert data['D'] == D
    assert data['type'] == ftype


def test_fieldinfo_d5(capsys, catalog_path):
    _, data = run_json(capsys, 'fieldinfo', '--d', '5')
    assert data['one_orbit'] is True
    assert data['u_f'] == [2, 1]
    assert data['splitting'] == {'5': 'inert'}


def test_moment_json(capsys, catalog_path):
    code, data = run_json(capsys, 'moment', '--d', '4', '--samples', '12')
    assert code == EXIT_OK
    assert data['components'] == 2
    assert data['samples'] == 24
    assert len(data['points']) == 24
    assert data['on_quadrics'] is True
    assert data['torus_radius'] == pytest.approx(10 ** -0.5)
    assert len(data['orbit_images']) == 16


def test_json_floats_have_seventeen_digits(capsys, catalog_path):
    assert main(['verify', '--d', '3', '--family-t', '0.1', '--tol', '0.1', '--json']) == EXIT_OK
    out = capsys.readouterr().out
    assert '"tol": 0.10000000000000001,' in out
    assert '"expected_abs_sq": 0.25,' in out
    assert json.loads(out)['tol'] == 0.1


def test_moment_single_branch_csv(capsys, catalog_path, tmp_path):
    out = tmp_path / 'points.csv'
    code = main(['moment', '--d', '5', '--samples', '9', '--branch', '1', '--output', str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == 'x_0,x_1,x_2,x_3,x_4,inside_delta'
    assert len(lines) == 10


def test_moment_without_fiducial_has_no_images(capsys, catalog_path):
    _, data = run_json(capsys, 'moment', '--d', '5', '--samples', '4')
    assert 'orbit_images' not in data
    assert data['components'] == 1


def test_search_saves_to_catalog(capsys, catalog_path):
    code, data = run_json(capsys, 'search', '--d', '2', '--restarts', '8', '--seed', '0')
    assert code == EXIT_OK
    assert data['success'] is True
    assert data['catalog'] == str(catalog_path)
    records = json.loads(catalog_path.read_text())
    assert len(records) == 1
    assert records[0]['d'] == 2


def test_search_no_save(capsys, catalog_path):
    code, data = run_json(capsys, 'search', '--d', '2', '--restarts', '8', '--no-save')
    assert code == EXIT_OK
    assert 'catalog' not in data
    assert not catalog_path.exists()


def test_failed_search_exit_code(capsys, catalog_path):
    code, data = run_json(capsys, 'search', '--d', '3', '--restarts', '1', '--max-iters', '1', '--tol', '1e-30')
    assert code == EXIT_FAILED
    assert data['success'] is False


def test_selftest_small_range(capsys, catalog_path):
    code, data = run_json(capsys, 'selftest', '--d-min', '2', '--d-max', '6')
    assert code == EXIT_OK
    assert data['passed'] is True
    assert data['failures'] == []
    names = {r['check'] for r in data['results']}
    assert {'dft_is_clifford', 'dft_relation', 'known_fiducial', 'overlap_symmetries',
            'orbit_divisor_match', 'unit_order'} <= names


@pytest.mark.slow
def test_selftest_default_range(catalog_path):
    assert main(['selftest']) == EXIT_OK

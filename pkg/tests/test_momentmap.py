import csv
import io
import math

import numpy as np
import pytest

from siclab.core.fiducials import SearchConfig, exact_fiducial_d2, exact_fiducial_d3, exact_fiducial_d4, search_fiducial
from siclab.core.heisenberg import Dimension
from siclab.core.momentmap import (admissible_geometry, admissible_parametrize, d4_bead_angles, d4_circle_point,
                                   dft_matrix, dft_relation_check, empirical_circumradius, is_admissible_image,
                                   moment_map, moment_points_to_csv, p_matrix, quadric_values, sample_admissible,
                                   SimplexPoint, torus_eigenbasis, write_moment_csv)
from siclab.core.overlap import cyclic_subgroup, enumerate_cyclic_subgroups


def test_simplex_point_validation():
    assert SimplexPoint([0.2, 0.3, 0.5]).inside
    assert not SimplexPoint([-0.1, 0.6, 0.5]).inside
    with pytest.raises(ValueError):
        SimplexPoint([0.2, 0.2, 0.2])


def test_dft_matrix_is_unitary_up_to_scale():
    V = dft_matrix(5)
    np.testing.assert_allclose(V.conj().T @ V, 5 * np.eye(5), atol=1e-12)


def test_hesse_moment_and_quadrics(dim3, hesse_vector):
    basis = torus_eigenbasis(dim3, cyclic_subgroup(dim3, (0, 1)))
    x = moment_map(dim3, basis, hesse_vector)
    np.testing.assert_allclose(x.coordinates, [0.0, 0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(quadric_values(x), [0.5, 0.25], atol=1e-12)
    assert is_admissible_image(dim3, x)


def test_eigenbasis_diagonalizes_generator(dim4):
    from siclab.core.heisenberg import displacement
    for C in enumerate_cyclic_subgroups(dim4):
        basis = torus_eigenbasis(dim4, C)
        op = displacement(dim4, C.generator)
        np.testing.assert_allclose(op @ basis.eigenvectors, basis.eigenvectors * basis.eigenvalues, atol=1e-10)


def test_eigenbasis_rejects_foreign_subgroup(dim4):
    C = cyclic_subgroup(Dimension(5), (0, 1))
    with pytest.raises(ValueError):
        torus_eigenbasis(dim4, C)


@pytest.mark.parametrize('d', [2, 3, 4, 5, 6])
def test_restricted_overlap_is_fourier_of_moment(d, random_unit_vector):
    dim = Dimension(d)
    for _ in range(3):
        z = random_unit_vector(d)
        for C in enumerate_cyclic_subgroups(dim):
            assert dft_relation_check(dim, z, C) < 1e-10


def test_moment_lies_in_simplex(dim4, random_unit_vector):
    basis = torus_eigenbasis(dim4, cyclic_subgroup(dim4, (1, 0)))
    x = moment_map(dim4, basis, random_unit_vector(4))
    assert x.inside
    assert x.coordinates.sum() == pytest.approx(1.0)


def test_bengtsson_moments_are_admissible(dim4, bengtsson):
    for C in enumerate_cyclic_subgroups(dim4):
        x = moment_map(dim4, torus_eigenbasis(dim4, C), bengtsson.vector)
        assert is_admissible_image(dim4, x, tol=1e-9)


def test_basis_vector_moment_is_not_admissible(dim3):
    basis = torus_eigenbasis(dim3, cyclic_subgroup(dim3, (0, 1)))
    x = moment_map(dim3, basis, [1.0, 0.0, 0.0])
    assert not is_admissible_image(dim3, x)
    with pytest.raises(ValueError):
        is_admissible_image(dim3, SimplexPoint([0.5, 0.5]))


@pytest.mark.parametrize('d, torus_dim, components', [(3, 1, 1), (4, 1, 2), (5, 2, 1), (6, 2, 2), (7, 3, 1)])
def test_admissible_geometry(d, torus_dim, components):
    geometry = admissible_geometry(Dimension(d))
    assert geometry.torus_dim == torus_dim
    assert geometry.components == components
    assert geometry.sphere_radius == pytest.approx(math.sqrt((d - 1) / (d * (d + 1))))
    assert geometry.torus_radius == pytest.approx(math.sqrt(2 / (d * (d + 1))))


def test_admissible_geometry_examples():
    assert admissible_geometry(Dimension(5)).sphere_radius == pytest.approx(math.sqrt(4 / 30))
    assert admissible_geometry(Dimension(4)).torus_radius == pytest.approx(1 / math.sqrt(10))
    with pytest.raises(ValueError):
        admissible_geometry(Dimension(2))


@pytest.mark.parametrize('d', [3, 4, 5, 6, 7])
def test_parametrized_points_are_admissible(d, rng):
    dim = Dimension(d)
    geometry = admissible_geometry(dim)
    branches = (1, -1) if d % 2 == 0 else (1,)
    for branch in branches:
        for _ in range(5):
            angles = rng.uniform(0, 2 * np.pi, geometry.torus_dim)
            x = admissible_parametrize(dim, angles, branch)
            assert is_admissible_image(dim, x)
            assert np.linalg.norm(x.coordinates - 1 / d) == pytest.approx(geometry.sphere_radius)


def test_parametrize_rejects_bad_arguments(dim4):
    with pytest.raises(ValueError):
        admissible_parametrize(dim4, [0.1, 0.2])
    with pytest.raises(ValueError):
        admissible_parametrize(dim4, [0.1], branch=0)


def test_even_branches_are_distinct(dim4):
    plus = admissible_parametrize(dim4, [0.3], 1)
    minus = admissible_parametrize(dim4, [0.3], -1)
    assert np.linalg.norm(plus.coordinates - minus.coordinates) > 0.1


@pytest.mark.parametrize('d', [2, 3, 4, 7, 8])
def test_p_matrix_is_orthogonal_after_scaling(d):
    P = p_matrix(d) / math.sqrt(2 * d)
    assert P.shape == (d, d)
    np.testing.assert_allclose(P.T @ P, np.eye(d), atol=1e-12)


def test_p_matrix_rejects_small_dimension():
    with pytest.raises(ValueError):
        p_matrix(1)


def test_sample_admissible_counts(dim3):
    assert len(sample_admissible(dim3, 36)) == 36
    assert len(sample_admissible(Dimension(5), 49)) == 49
    with pytest.raises(ValueError):
        sample_admissible(dim3, 0)


def test_sample_admissible_covers_every_axis():
    dim5 = Dimension(5)
    points = np.array([p.coordinates for p in sample_admissible(dim5, 50)])
    assert len(points) == 64
    for theta in 2 * np.pi * np.arange(8) / 8:
        corner = admissible_parametrize(dim5, [theta, 0.0]).coordinates
        assert np.min(np.linalg.norm(points - corner, axis=1)) < 1e-12


@pytest.mark.parametrize('branch', [1, -1])
def test_d4_circumradius(dim4, branch):
    radii = empirical_circumradius(dim4, 360, branch)
    np.testing.assert_allclose(radii, [1 / math.sqrt(10)], atol=1e-12)


def test_d5_circumradii():
    radii = empirical_circumradius(Dimension(5), 19 ** 2)
    np.testing.assert_allclose(radii, [math.sqrt(2 / 30)] * 2, atol=1e-12)


@pytest.mark.parametrize('swap', [False, True])
def test_d4_circles_are_admissible(dim4, swap):
    for theta in np.linspace(0, 2 * np.pi, 25):
        assert is_admissible_image(dim4, d4_circle_point(theta, swap))


def test_d4_bead_angles():
    beads = d4_bead_angles()
    assert len(beads) == 8
    assert sum(swap for _, swap in beads) == 4
    for theta, swap in beads:
        trig = math.cos(theta) if swap else math.sin(theta)
        assert trig ** 2 == pytest.approx((3 - math.sqrt(5)) / 4)
        point = d4_circle_point(theta, swap)
        assert point.inside
        assert point.coordinates.min() > 0


def test_write_moment_csv(dim3):
    points = sample_admissible(dim3, 6)
    stream = io.StringIO()
    write_moment_csv(points, stream)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0] == ['x_0', 'x_1', 'x_2', 'inside_delta']
    assert len(rows) == 7
    assert float(rows[1][0]) == points[0].coordinates[0]
    assert rows[1][3] in ('0', '1')
    with pytest.raises(ValueError):
        write_moment_csv([], stream)


def test_moment_points_to_csv_creates_directory(tmp_path, dim3):
    path = tmp_path / 'nested' / 'moments.csv'
    moment_points_to_csv(sample_admissible(dim3, 4), str(path))
    assert path.read_text().startswith('x_0,x_1,x_2,inside_delta')


def _assert_moment_identities(dim, z):
    d = dim.d
    radius = math.sqrt((d - 1) / (d * (d + 1)))
    for C in enumerate_cyclic_subgroups(dim):
        x = moment_map(dim, torus_eigenbasis(dim, C), z)
        f = quadric_values(x)
        assert f[0] == pytest.approx(2 / (d + 1), abs=1e-8)
        np.testing.assert_allclose(f[1:], 1 / (d + 1), atol=1e-8)
        assert np.linalg.norm(x.coordinates - 1 / d) == pytest.approx(radius, abs=1e-8)
        if d % 2 == 0:
            alternating = float(np.dot((-1.0) ** np.arange(d), x.coordinates))
            assert abs(alternating) == pytest.approx(1 / math.sqrt(d + 1), abs=1e-8)


@pytest.mark.parametrize('record', [exact_fiducial_d2(), exact_fiducial_d3(0.3), exact_fiducial_d4()])
def test_exact_fiducials_satisfy_moment_identities(record):
    _assert_moment_identities(Dimension(record.d), record.vector)


@pytest.mark.slow
@pytest.mark.parametrize('d', [5, 6, 7, 8])
def test_searched_fiducials_satisfy_moment_identities(d):
    report = search_fiducial(SearchConfig(d=d, restarts=256, seed=0))
    assert report.success
    _assert_moment_identities(Dimension(d), report.record.vector)

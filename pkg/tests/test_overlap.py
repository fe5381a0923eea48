import itertools
import math

import numpy as np
import pytest

from siclab.core.heisenberg import Dimension, symplectic_pairing
from siclab.core.overlap import (CyclicSubgroup, OverlapTable, canonical_generators, cyclic_subgroup,
                                 enumerate_cyclic_subgroups, is_sic_fiducial, orbit_vectors, overlap_map,
                                 pairwise_overlap, projective_line_size, reconstruct_projector,
                                 recover_vector, restricted_overlap)


def test_overlap_hesse_first_row(dim3, hesse_vector):
    table = overlap_map(dim3, hesse_vector)
    assert table[(0, 0)] == pytest.approx(1.0)
    assert table[(0, 1)] == pytest.approx(-0.5)
    assert table[(0, 2)] == pytest.approx(-0.5)


@pytest.mark.parametrize('t', [0.0, 0.2, 0.7])
def test_overlap_family_shift_row(dim3, t):
    z = np.array([0, 1, -np.exp(1j * t)]) / math.sqrt(2)
    table = overlap_map(dim3, z)
    for j in range(3):
        assert table[(1, j)] == pytest.approx(-np.exp(-1j * t) / 2, abs=1e-12)


def test_overlap_matches_direct_inner_products(dim4, random_unit_vector):
    from siclab.core.heisenberg import displacement
    z = random_unit_vector(4)
    table = overlap_map(dim4, z)
    for p in dim4.indices():
        assert table[p] == pytest.approx(np.vdot(z, displacement(dim4, p) @ z), abs=1e-12)


def test_overlap_rejects_unnormalized(dim3):
    with pytest.raises(ValueError):
        overlap_map(dim3, [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        overlap_map(dim3, [1.0, 0.0])


@pytest.mark.parametrize('d', [2, 3, 4, 6])
def test_overlap_table_symmetries(d, random_unit_vector):
    dim = Dimension(d)
    table = overlap_map(dim, random_unit_vector(d))
    for p in dim.indices():
        assert table[-p] == pytest.approx(np.conj(table[p]), abs=1e-12)
    if dim.is_even:
        for p, q in itertools.product(dim.indices(d), repeat=2):
            sign = -1 if symplectic_pairing(p, q) % 2 else 1
            shifted = dim.index(p.p1 + d * q.p1, p.p2 + d * q.p2)
            assert table[shifted] == pytest.approx(sign * table[p], abs=1e-12)


def test_overlap_table_json_schema(dim4, bengtsson):
    table = overlap_map(dim4, bengtsson.vector)
    data = table.to_json()
    assert data['d'] == 4 and data['dbar'] == 8
    assert len(data['values']) == 64
    assert data['values'][0] == pytest.approx([1.0, 0.0])
    restored = OverlapTable.from_json(data)
    np.testing.assert_allclose(restored.values, table.values)


def test_overlap_table_from_json_rejects_bad_size():
    with pytest.raises(ValueError):
        OverlapTable.from_json({'d': 3, 'values': [[1.0, 0.0]] * 8})
    with pytest.raises(ValueError):
        OverlapTable.from_json({'d': 3, 'dbar': 6, 'values': [[1.0, 0.0]] * 9})


@pytest.mark.parametrize('t', [0.3, 1.0])
def test_hesse_family_is_sic(dim3, t):
    z = np.array([0, 1, -np.exp(1j * t)]) / math.sqrt(2)
    report = is_sic_fiducial(dim3, z)
    assert report.passed
    assert report.worst_residual < 1e-12


def test_basis_vector_is_not_sic(dim3):
    report = is_sic_fiducial(dim3, [1.0, 0.0, 0.0])
    assert not report.passed
    assert report.worst_residual == pytest.approx(0.75)
    assert overlap_map(dim3, [1.0, 0.0, 0.0])[(0, 1)] == pytest.approx(1.0)


def test_bengtsson_is_sic(dim4, bengtsson):
    report = is_sic_fiducial(dim4, bengtsson.vector)
    assert report.passed
    table = overlap_map(dim4, bengtsson.vector)
    assert abs(table[(0, 1)]) == pytest.approx(1 / math.sqrt(5), abs=1e-10)


def test_pairwise_overlap_examples(random_unit_vector):
    z = random_unit_vector(3)
    assert pairwise_overlap(z, z) == pytest.approx(1.0)
    assert pairwise_overlap([1, 0, 0], [0, 1, 0]) == 0.0
    with pytest.raises(ValueError):
        pairwise_overlap([0, 0, 0], z)


def test_pairwise_overlap_is_scale_invariant(random_unit_vector, rng):
    w, z = random_unit_vector(5), random_unit_vector(5)
    alpha, beta = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    assert pairwise_overlap(alpha * w, beta * z) == pytest.approx(pairwise_overlap(w, z), abs=1e-14)


def test_family_orbits_are_equiangular(dim3):
    for t in np.linspace(0, math.pi / 9, 50):
        z = np.array([0, 1, -np.exp(1j * t)]) / math.sqrt(2)
        orbit = orbit_vectors(dim3, z)
        assert orbit.shape == (9, 3)
        for i, j in itertools.combinations(range(9), 2):
            assert pairwise_overlap(orbit[i], orbit[j]) == pytest.approx(0.25, abs=1e-10)


@pytest.mark.parametrize('d', range(2, 13))
def test_projector_roundtrip(d, random_unit_vector):
    dim = Dimension(d)
    for _ in range(100):
        z = random_unit_vector(d)
        result = reconstruct_projector(dim, overlap_map(dim, z))
        assert result.realizable
        np.testing.assert_allclose(result.matrix, np.outer(z, z.conj()), atol=1e-10)


def test_maximally_mixed_table_is_flagged(dim3):
    values = np.zeros((3, 3), dtype=complex)
    values[0, 0] = 1.0
    result = reconstruct_projector(dim3, OverlapTable(dim3, values))
    np.testing.assert_allclose(result.matrix, np.eye(3) / 3, atol=1e-12)
    assert result.is_hermitian
    assert not result.is_rank_one
    assert result.top_eigenvalues[0] == pytest.approx(1 / 3)


def test_bengtsson_vector_recovered(dim4, bengtsson):
    result = reconstruct_projector(dim4, overlap_map(dim4, bengtsson.vector))
    recovered = recover_vector(result.matrix)
    assert pairwise_overlap(recovered, bengtsson.vector) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(recovered) == pytest.approx(1.0)


@pytest.mark.parametrize('dbar, count', [(3, 4), (8, 12), (12, 24), (5, 6), (9, 12)])
def test_cyclic_subgroup_counts(dbar, count):
    assert projective_line_size(dbar) == count
    assert len(canonical_generators(dbar)) == count


def _brute_force_subgroups(n):
    subgroups = set()
    for p1, p2 in itertools.product(range(n), repeat=2):
        if math.gcd(math.gcd(p1, p2), n) == 1:
            subgroups.add(frozenset(((k * p1) % n, (k * p2) % n) for k in range(n)))
    return subgroups


@pytest.mark.parametrize('n', list(range(2, 65)))
def test_subgroup_count_matches_brute_force(n):
    assert len(canonical_generators(n)) == len(_brute_force_subgroups(n)) == projective_line_size(n)


def test_enumerate_cyclic_subgroups_are_canonical(dim4):
    subgroups = enumerate_cyclic_subgroups(dim4)
    assert len(subgroups) == 12
    for C in subgroups:
        assert cyclic_subgroup(dim4, C.generator) == C
        assert len(set(C.elements())) == 8


def test_cyclic_subgroup_canonical_form(dim3):
    assert cyclic_subgroup(dim3, (0, 2)).generator.as_tuple() == (0, 1)
    assert cyclic_subgroup(dim3, (2, 2)).generator.as_tuple() == (1, 1)
    with pytest.raises(ValueError):
        cyclic_subgroup(Dimension(4), (2, 2))
    with pytest.raises(ValueError):
        CyclicSubgroup(Dimension(4).index(2, 0), 8)


def test_restricted_overlap_examples(dim3, hesse_vector, random_unit_vector):
    alpha = restricted_overlap(dim3, hesse_vector, cyclic_subgroup(dim3, (0, 1)))
    np.testing.assert_allclose(alpha, [1.0, -0.5, -0.5], atol=1e-12)
    z = random_unit_vector(5)
    dim5 = Dimension(5)
    for C in enumerate_cyclic_subgroups(dim5):
        alpha = restricted_overlap(dim5, z, C)
        assert alpha[0] == pytest.approx(1.0)
        np.testing.assert_allclose(alpha[1:], np.conj(alpha[1:][::-1]), atol=1e-12)


def test_restricted_overlap_even_sign_flips(dim4, random_unit_vector):
    z = random_unit_vector(4)
    a = restricted_overlap(dim4, z, cyclic_subgroup(dim4, (0, 1)))
    b = restricted_overlap(dim4, z, cyclic_subgroup(dim4, (4, 1)))
    for k in range(4):
        if k % 2 == 0:
            assert b[k] == pytest.approx(a[k], abs=1e-12)
        else:
            assert b[k] == pytest.approx(-a[k], abs=1e-12)

"""Moment maps of maximal tori, their Fourier relation to restricted overlaps, and the
quadric description of the admissible set.

For a cyclic subgroup ``C`` with generator ``p`` the torus is diagonalized by the
eigenbasis of ``D_p``; the moment map sends ``[z]`` to the squared moduli of its
coordinates in that basis and lands in the standard simplex.
"""

import csv
import itertools
import logging
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, TextIO

import numpy as np

from siclab.core.heisenberg import Dimension, displacement
from siclab.core.overlap import CyclicSubgroup, as_unit_vector, restricted_overlap
from siclab.core.utils import ensure_dir_exists

logger = logging.getLogger(__name__)

SUM_TOL = 1e-10
INSIDE_TOL = 1e-12
ADMISSIBLE_TOL = 1e-9
EIGEN_TOL = 1e-8


@dataclass
class SimplexPoint:
    """A point ``x`` of the hyperplane ``sum x_i = 1``; ``inside`` says whether it lies in the simplex."""

    coordinates: np.ndarray
    inside: bool = True

    def __post_init__(self) -> None:
        self.coordinates = np.asarray(self.coordinates, dtype=float).reshape(-1)
        total = float(self.coordinates.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"Coordinates must sum to 1, got {total:.15g}")
        self.inside = bool(np.all(self.coordinates >= -INSIDE_TOL))

    @property
    def d(self) -> int:
        return self.coordinates.shape[0]


@dataclass
class TorusEigenbasis:
    """Eigenvectors ``e_j`` of the subgroup generator, column ``j`` with eigenvalue ``omega^j``."""

    subgroup: CyclicSubgroup
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray


def dft_matrix(d: int) -> np.ndarray:
    """The Vandermonde matrix ``V_{ij} = omega^{ij}``."""
    dim = Dimension(d)
    i = np.arange(d)
    return dim.phase(2 * np.outer(i, i))


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # First component with non-negligible modulus becomes real positive
    k = int(np.argmax(np.abs(vec) > 1e-8))
    return vec * (abs(vec[k]) / vec[k])


def torus_eigenbasis(dim: Dimension, C: CyclicSubgroup) -> TorusEigenbasis:
    """Diagonalize ``D_p`` for the generator ``p`` of ``C``.

    Raises:
        ValueError: If the eigenvalues are not the ``d`` distinct ``d``-th roots of unity.
    """
    if C.generator.dbar != dim.dbar:
        raise ValueError(f"Subgroup lives in Z_{C.generator.dbar}^2, expected Z_{dim.dbar}^2")
    d = dim.d
    op = displacement(dim, C.generator)
    vals, vecs = np.linalg.eig(op)

    slots = np.mod(np.rint(np.angle(vals) * d / (2 * np.pi)).astype(int), d)
    if len(set(slots.tolist())) != d:
        raise ValueError(f"Eigenvalues of D_{C.generator.as_tuple()} are not distinct roots of unity")
    roots = dim.phase(2 * np.arange(d))
    if np.max(np.abs(vals - roots[slots])) > EIGEN_TOL:
        raise ValueError(f"Eigenvalues of D_{C.generator.as_tuple()} are not d-th roots of unity")

    basis = np.empty((d, d), dtype=complex)
    for col, j in enumerate(slots):
        v = vecs[:, col] / np.linalg.norm(vecs[:, col])
        basis[:, j] = _fix_phase(v)

    residual = np.linalg.norm(op @ basis - basis * roots[np.newaxis, :])
    if residual > 1e-10 or np.linalg.norm(basis.conj().T @ basis - np.eye(d)) > 1e-10:
        raise ValueError(f"Eigenbasis of D_{C.generator.as_tuple()} failed verification ({residual:.2e})")
    return TorusEigenbasis(C, basis, roots)


def moment_map(dim: Dimension, basis: TorusEigenbasis, z: Sequence[complex]) -> SimplexPoint:
    """``mu_j([z]) = |<e_j, z>|^2``."""
    z = as_unit_vector(z, dim)
    coords = np.abs(basis.eigenvectors.conj().T @ z) ** 2
    # Absorb rounding so the coordinates sum to one exactly enough for SimplexPoint
    return SimplexPoint(coords / coords.sum())


def dft_relation_check(dim: Dimension, z: Sequence[complex], C: CyclicSubgroup,
                       basis: Optional[TorusEigenbasis] = None) -> float:
    """Max deviation between the restricted overlap along ``C`` and ``V mu([z])``."""
    basis = basis or torus_eigenbasis(dim, C)
    alpha = restricted_overlap(dim, z, C)
    mu = moment_map(dim, basis, z).coordinates
    return float(np.max(np.abs(alpha - dft_matrix(dim.d) @ mu)))


def quadric_values(x: SimplexPoint) -> np.ndarray:
    """The cyclic quadrics ``f_j = sum_i x_i x_{i+j}`` for ``j = 0 .. floor(d/2)``."""
    c = x.coordinates
    n = c.shape[0] // 2
    return np.array([float(np.dot(c, np.roll(c, -j))) for j in range(n + 1)])


def is_admissible_image(dim: Dimension, x: SimplexPoint, tol: float = ADMISSIBLE_TOL) -> bool:
    """Whether ``f_0 = 2/(d+1)`` and ``f_j = 1/(d+1)`` for ``1 <= j <= floor(d/2)``."""
    if x.d != dim.d:
        raise ValueError(f"Point has {x.d} coordinates, expected d={dim.d}")
    f = quadric_values(x)
    lam = 1.0 / (dim.d + 1)
    return bool(abs(f[0] - 2 * lam) <= tol and np.all(np.abs(f[1:] - lam) <= tol))


@dataclass
class AdmissibleGeometry:
    sphere_radius: float
    torus_dim: int
    torus_radius: float
    components: int


def admissible_geometry(dim: Dimension) -> AdmissibleGeometry:
    """Radii and shape of the admissible torus for dimension ``d >= 3``."""
    d = dim.d
    if d < 3:
        raise ValueError(f"The admissible torus is described for d >= 3, got d={d}")
    n = d // 2
    return AdmissibleGeometry(
        sphere_radius=math.sqrt((d - 1) / (d * (d + 1))),
        torus_dim=n - 1 if d % 2 == 0 else n,
        torus_radius=math.sqrt(2 / (d * (d + 1))),
        components=2 if d % 2 == 0 else 1,
    )


def admissible_parametrize(dim: Dimension, angles: Sequence[float], branch: int = 1) -> SimplexPoint:
    """The point of the admissible torus with restricted overlaps ``e^{i theta_k} / sqrt(d+1)``.

    Args:
        dim: The dimension, ``d >= 3``.
        angles: One angle per torus direction: ``floor(d/2)`` of them for odd ``d``,
            ``d/2 - 1`` for even ``d``.
        branch: For even ``d``, the sign of ``alpha_{d/2} = +-1/sqrt(d+1)``, which picks the
            component.

    Returns:
        The point, flagged ``inside=False`` when the torus leaves the simplex there.
    """
    d = dim.d
    geometry = admissible_geometry(dim)
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.shape[0] != geometry.torus_dim:
        raise ValueError(f"Expected {geometry.torus_dim} angles for d={d}, got {angles.shape[0]}")
    if branch not in (1, -1):
        raise ValueError(f"Branch must be +1 or -1, got {branch}")

    scale = 1.0 / math.sqrt(d + 1)
    alpha = np.zeros(d, dtype=complex)
    alpha[0] = 1.0
    for k, theta in enumerate(angles, start=1):
        alpha[k] = scale * np.exp(1j * theta)
        alpha[d - k] = np.conj(alpha[k])
    if d % 2 == 0:
        alpha[d // 2] = branch * scale

    # alpha = V x, so x = V^* alpha / d
    x = (dft_matrix(d).conj().T @ alpha).real / d
    point = SimplexPoint(x)
    if not point.inside:
        logger.debug(f"Admissible point at angles {angles.tolist()} lies outside the simplex")
    return point


def p_matrix(d: int) -> np.ndarray:
    """Real Fourier matrix whose rescaling ``P / sqrt(2d)`` is orthogonal.

    Column 0 is constant ``sqrt(2)``, then cosine columns, then (for even ``d``) the
    alternating column, then sine columns.
    """
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    n = d // 2
    i = np.arange(d)[:, np.newaxis]
    cols = [np.full((d, 1), math.sqrt(2))]
    last_cos = n if d % 2 else n - 1
    for j in range(1, last_cos + 1):
        cols.append(2 * np.cos(2 * np.pi * i * j / d))
    if d % 2 == 0:
        cols.append(-((-1.0) ** i) * math.sqrt(2))
    for j in range(1, last_cos + 1):
        cols.append(2 * np.sin(2 * np.pi * i * j / d))
    return np.hstack(cols)


def sample_admissible(dim: Dimension, samples: int, branch: int = 1) -> List[SimplexPoint]:
    """Points on a regular angular grid of the admissible torus.

    One-dimensional tori get ``samples`` equally spaced angles; higher dimensional ones the
    full product grid of ``ceil(samples^(1/k))`` angles per axis, so every axis is covered and
    at least ``samples`` points come back.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    k = admissible_geometry(dim).torus_dim
    per_axis = max(1, math.ceil(round(samples ** (1.0 / k), 9)))
    grid = np.linspace(0.0, 2 * np.pi, per_axis, endpoint=False)
    return [admissible_parametrize(dim, angles, branch) for angles in itertools.product(grid, repeat=k)]


def empirical_circumradius(dim: Dimension, samples: int = 360, branch: int = 1) -> np.ndarray:
    """Measured radius of each circle factor of the admissible torus.

    Samples are projected onto the 2-planes spanned by the cosine and sine columns of
    ``p_matrix``; the mean distance from the sample centroid in each plane is reported.
    """
    points = np.array([p.coordinates for p in sample_admissible(dim, samples, branch)])
    centred = points - points.mean(axis=0)
    d = dim.d
    basis = p_matrix(d) / math.sqrt(2 * d)
    k = admissible_geometry(dim).torus_dim
    offset = k + 1 + (1 if d % 2 == 0 else 0)
    radii = []
    for j in range(1, k + 1):
        plane = basis[:, [j, offset + j - 1]]
        radii.append(float(np.mean(np.linalg.norm(centred @ plane, axis=1))))
    return np.array(radii)


GOLDEN = (math.sqrt(5) + 1) / 2
GOLDEN_CONJ = (math.sqrt(5) - 1) / 2


def d4_circle_point(theta: float, swap: bool = False) -> SimplexPoint:
    """A point of the d=4 golden-ratio circles.

    ``2 sqrt(5) x = (phi + cos t, psi + sin t, phi - cos t, psi - sin t)``, with ``phi`` and
    ``psi`` exchanged when ``swap`` is set (the ``branch=-1`` component).
    """
    a, b = (GOLDEN_CONJ, GOLDEN) if swap else (GOLDEN, GOLDEN_CONJ)
    c, s = math.cos(theta), math.sin(theta)
    return SimplexPoint(np.array([a + c, b + s, a - c, b - s]) / (2 * math.sqrt(5)))


def d4_bead_angles() -> List[tuple]:
    """The eight beads as ``(theta, swap)``: four per circle.

    On the swapped circle ``cos^2 theta = (3 - sqrt5)/4``; on the other the roles of
    cosine and sine are exchanged.
    """
    small = 0.5 * math.sqrt(3 - math.sqrt(5))
    large = 0.5 * math.sqrt(1 + math.sqrt(5))
    beads = []
    for swap, (c, s) in ((True, (small, large)), (False, (large, small))):
        for sc, ss in itertools.product((1, -1), repeat=2):
            beads.append((math.atan2(ss * s, sc * c), swap))
    return beads


def write_moment_csv(points: Sequence[SimplexPoint], stream: TextIO) -> None:
    """Write points as CSV with columns ``x_0 .. x_{d-1}, inside_delta``."""
    if not points:
        raise ValueError("No points to export")
    d = points[0].d
    writer = csv.writer(stream)
    writer.writerow([f'x_{i}' for i in range(d)] + ['inside_delta'])
    for point in points:
        writer.writerow(['%.17g' % v for v in point.coordinates] + [int(point.inside)])


def moment_points_to_csv(points: Sequence[SimplexPoint], path: str) -> None:
    ensure_dir_exists(os.path.dirname(os.path.abspath(path)))
    with open(path, 'w', newline='', encoding='utf-8') as f:
        write_moment_csv(points, f)
    logger.info(f"Wrote {len(points)} moment points to {path}")

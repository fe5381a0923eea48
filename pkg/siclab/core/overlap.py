"""Overlap maps, SIC verification, projector reconstruction and cyclic subgroups of Z_dbar^2."""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from sympy import factorint

from siclab.core.heisenberg import Dimension, DisplacementIndex, _as_index, displacement
from siclab.core.utils import complex_to_pairs, pairs_to_complex

logger = logging.getLogger(__name__)

NORM_TOL = 1e-9
SIC_TOL = 1e-9
RANK_TOL = 1e-8


def as_unit_vector(z: Sequence[complex], dim: Optional[Dimension] = None, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a candidate fiducial ``z`` and return it as a complex array.

    Raises:
        ValueError: If the length is wrong or ``| ||z|| - 1 | > tol``.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if dim is not None and z.shape[0] != dim.d:
        raise ValueError(f"Vector has length {z.shape[0]}, expected d={dim.d}")
    norm = np.linalg.norm(z)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"Vector must be normalized, got norm {norm:.12g}")
    return z


def normalize(z: Sequence[complex]) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    norm = np.linalg.norm(z)
    if norm == 0:
        raise ValueError("Cannot normalize the zero vector")
    return z / norm


@dataclass
class OverlapTable:
    """The full ``dbar x dbar`` grid of overlap values ``Phi_z(p) = <z, D_p z>``."""

    dim: Dimension
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.dim.dbar, self.dim.dbar)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != expected:
            raise ValueError(f"Overlap table must have shape {expected}, got {self.values.shape}")

    def __getitem__(self, p: Union[DisplacementIndex, Sequence[int]]) -> complex:
        p = _as_index(self.dim, p)
        return complex(self.values[p.p1, p.p2])

    def to_json(self) -> Dict[str, Any]:
        return {
            'd': self.dim.d,
            'dbar': self.dim.dbar,
            'values': complex_to_pairs(self.values.reshape(-1)),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> 'OverlapTable':
        dim = Dimension(int(data['d']))
        if int(data.get('dbar', dim.dbar)) != dim.dbar:
            raise ValueError(f"dbar {data['dbar']} inconsistent with d={dim.d}")
        values = pairs_to_complex(data['values'])
        if values.size != dim.dbar ** 2:
            raise ValueError(f"Expected {dim.dbar ** 2} overlap values, got {values.size}")
        return cls(dim, values.reshape(dim.dbar, dim.dbar))


def overlap_map(dim: Dimension, z: Sequence[complex]) -> OverlapTable:
    """Compute ``Phi_z(p) = <z, D_p z>`` for every ``p`` in ``Z_dbar^2``.

    For fixed ``p1`` the sum over the clock exponent is a discrete Fourier transform,
    so the whole table costs ``O(d^2 log d)``.

    Raises:
        ValueError: If ``z`` is not normalized.
    """
    z = as_unit_vector(z, dim)
    d, dbar = dim.d, dim.dbar
    values = np.empty((dbar, dbar), dtype=complex)
    p2 = np.arange(dbar)
    for p1 in range(dbar):
        # a_j = conj(z_{j+p1}) z_j ; sum_j a_j omega^{p2 j}
        a = np.conj(np.roll(z, -(p1 % d))) * z
        fourier = d * np.fft.ifft(a)
        values[p1] = dim.phase(p1 * p2 * (d + 1)) * fourier[p2 % d]
    return OverlapTable(dim, values)


@dataclass
class SicReport:
    passed: bool
    worst_residual: float
    worst_index: DisplacementIndex


def sic_residuals(table: OverlapTable) -> np.ndarray:
    """``| |Phi(p)|^2 - 1/(d+1) |`` on ``Z_d^2``, with ``p = 0`` masked to zero."""
    d = table.dim.d
    block = table.values[:d, :d]
    residuals = np.abs(np.abs(block) ** 2 - 1.0 / (d + 1))
    residuals[0, 0] = 0.0
    return residuals


def is_sic_fiducial(dim: Dimension, z: Sequence[complex], tol: float = SIC_TOL) -> SicReport:
    """Check that every non-identity overlap has squared modulus ``1/(d+1)``.

    Indices congruent to ``0`` mod ``d`` are skipped since those ``D_p`` are ``+-I``;
    by periodicity the remaining grid reduces to ``Z_d^2``.
    """
    table = overlap_map(dim, z)
    residuals = sic_residuals(table)
    flat = int(np.argmax(residuals))
    p1, p2 = divmod(flat, dim.d)
    worst = float(residuals[p1, p2])
    report = SicReport(passed=worst <= tol, worst_residual=worst, worst_index=dim.index(p1, p2))
    logger.debug(f"SIC check d={dim.d}: worst residual {worst:.3e} at {(p1, p2)}")
    return report


def pairwise_overlap(w: Sequence[complex], z: Sequence[complex]) -> float:
    """Fubini-Study transition probability ``|<w,z>|^2 / (||w||^2 ||z||^2)``.

    Raises:
        ValueError: If either vector is zero.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    z = np.asarray(z, dtype=complex).reshape(-1)
    nw, nz = np.vdot(w, w).real, np.vdot(z, z).real
    if nw == 0 or nz == 0:
        raise ValueError("Transition probability is undefined for the zero vector")
    return float(abs(np.vdot(w, z)) ** 2 / (nw * nz))


def orbit_vectors(dim: Dimension, z: Sequence[complex]) -> np.ndarray:
    """The ``d^2`` vectors ``D_p z`` for ``p`` in ``Z_d^2``, one per row."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    return np.array([displacement(dim, (p1, p2)) @ z
                     for p1 in range(dim.d) for p2 in range(dim.d)])


@dataclass
class ProjectorReconstruction:
    """Outcome of inverting an overlap table back to a density matrix."""

    matrix: np.ndarray
    is_hermitian: bool
    is_rank_one: bool
    top_eigenvalues: tuple

    @property
    def realizable(self) -> bool:
        return self.is_hermitian and self.is_rank_one


def reconstruct_projector(dim: Dimension, table: OverlapTable, tol: float = RANK_TOL) -> ProjectorReconstruction:
    """Rebuild ``(1/d) sum_{p in Z_d^2} Phi(p) D_p^*``.

    For a table of a unit vector ``z`` this is ``z z^*``. Tables that are not realizable
    come back flagged with the two largest eigenvalues, and are logged.
    """
    if table.dim != dim:
        raise ValueError(f"Table is for d={table.dim.d}, expected d={dim.d}")
    d = dim.d
    j = np.arange(d)
    p2 = np.arange(d)
    mat = np.zeros((d, d), dtype=complex)
    for p1 in range(d):
        # D_p^* is supported on entries (j, j + p1) with value conj(tau^{p1 p2} omega^{p2 j})
        coeff = table.values[p1, :d] * dim.phase(-p1 * p2 * (d + 1))
        mat[j, (j + p1) % d] = np.fft.fft(coeff)
    mat /= d

    hermitian = bool(np.linalg.norm(mat - mat.conj().T) < tol)
    eigs = np.sort(np.linalg.eigvalsh((mat + mat.conj().T) / 2))[::-1]
    top = tuple(float(e) for e in eigs[:2])
    rank_one = hermitian and abs(top[0] - 1.0) < tol and (d < 2 or abs(top[1]) < tol)
    if not (hermitian and rank_one):
        logger.warning(f"Overlap table is not realizable by a vector: hermitian={hermitian}, "
                       f"top eigenvalues={top}")
    return ProjectorReconstruction(mat, hermitian, rank_one, top)


def recover_vector(projector: np.ndarray) -> np.ndarray:
    """Read a unit vector off a rank-one projector, up to global phase.

    Uses the column with the largest diagonal entry, rescaled so that entry is real positive.
    """
    projector = np.asarray(projector, dtype=complex)
    k = int(np.argmax(np.real(np.diag(projector))))
    col = projector[:, k]
    return col / np.sqrt(projector[k, k].real)


@dataclass(frozen=True)
class CyclicSubgroup:
    """An order-``dbar`` cyclic subgroup of ``Z_dbar^2`` given by its canonical generator."""

    generator: DisplacementIndex
    order: int

    def __post_init__(self) -> None:
        g = self.generator
        if math.gcd(math.gcd(g.p1, g.p2), g.dbar) != 1:
            raise ValueError(f"Generator {g.as_tuple()} does not have full order {g.dbar}")

    def elements(self) -> List[DisplacementIndex]:
        return [self.generator.scale(k) for k in range(self.order)]


def _unit_residues(n: int) -> List[int]:
    return [k for k in range(1, n + 1) if math.gcd(k, n) == 1] if n > 1 else [0]


def canonical_generators(n: int) -> List[tuple]:
    """Lexicographically smallest generator of every order-``n`` cyclic subgroup of ``Z_n^2``."""
    seen = np.zeros((n, n), dtype=bool)
    units = _unit_residues(n)
    gens = []
    for p1 in range(n):
        for p2 in range(n):
            if seen[p1, p2] or math.gcd(math.gcd(p1, p2), n) != 1:
                continue
            gens.append((p1, p2))
            for k in units:
                seen[(k * p1) % n, (k * p2) % n] = True
    return gens


def cyclic_subgroup(dim: Dimension, p: Union[DisplacementIndex, Sequence[int]]) -> CyclicSubgroup:
    """The cyclic subgroup generated by ``p``, described by its canonical generator.

    Raises:
        ValueError: If ``p`` does not have full order ``dbar``.
    """
    p = _as_index(dim, p)
    n = dim.dbar
    if math.gcd(math.gcd(p.p1, p.p2), n) != 1:
        raise ValueError(f"Generator {p.as_tuple()} does not have full order {n}")
    best = min(((k * p.p1) % n, (k * p.p2) % n) for k in _unit_residues(n))
    return CyclicSubgroup(dim.index(*best), n)


def enumerate_cyclic_subgroups(dim: Dimension) -> List[CyclicSubgroup]:
    subgroups = [CyclicSubgroup(dim.index(p1, p2), dim.dbar)
                 for p1, p2 in canonical_generators(dim.dbar)]
    logger.debug(f"Found {len(subgroups)} cyclic subgroups of Z_{dim.dbar}^2")
    return subgroups


def projective_line_size(n: int) -> int:
    """``prod p^{k-1} (p+1)`` over the prime powers exactly dividing ``n``."""
    size = 1
    for p, k in factorint(n).items():
        size *= p ** (k - 1) * (p + 1)
    return size


def restricted_overlap(dim: Dimension, z: Sequence[complex], C: CyclicSubgroup) -> np.ndarray:
    """``(Phi_z(k p))_{k=0..d-1}`` along the generator ``p`` of ``C``."""
    table = overlap_map(dim, z)
    g = C.generator
    k = np.arange(dim.d)
    return table.values[(k * g.p1) % dim.dbar, (k * g.p2) % dim.dbar]

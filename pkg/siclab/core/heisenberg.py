"""Weyl-Heisenberg displacement operators, the symplectic pairing and Clifford conjugation.

Phases are always produced from integer exponents of ``e^{i pi / d}`` reduced mod ``2d``,
so the same index yields bit-identical matrices no matter how it was reached.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

MAX_DIMENSION = 256
UNITARY_TOL = 1e-10


class VerificationError(ValueError):
    """A numerical identity that should hold exactly was violated.

    Attributes:
        index: The displacement index where the check failed, if any.
        residual: The Frobenius norm of the discrepancy.
    """

    def __init__(self, message: str, index: Optional[Tuple[int, int]] = None,
                 residual: Optional[float] = None) -> None:
        super().__init__(message)
        self.index = index
        self.residual = residual


@dataclass(frozen=True)
class Dimension:
    """Hilbert space dimension ``d`` together with the index modulus ``dbar``."""

    d: int
    dbar: int = field(init=False)

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or not isinstance(self.d, (int, np.integer)):
            raise ValueError(f"Dimension must be an integer, got {self.d!r}")
        if self.d < 2:
            raise ValueError(f"Dimension must be at least 2, got {self.d}")
        if self.d > MAX_DIMENSION:
            raise ValueError(f"Dimension {self.d} exceeds the supported range (<= {MAX_DIMENSION})")
        object.__setattr__(self, 'd', int(self.d))
        object.__setattr__(self, 'dbar', self.d if self.d % 2 else 2 * self.d)

    @property
    def is_even(self) -> bool:
        return self.d % 2 == 0

    def roots(self) -> np.ndarray:
        """Table of ``e^{i pi k / d}`` for ``k = 0 .. 2d-1``."""
        return _root_table(self.d)

    def phase(self, exponent: Union[int, np.ndarray]) -> Union[complex, np.ndarray]:
        """Evaluate ``e^{i pi k / d}`` from an integer exponent ``k``."""
        return self.roots()[np.mod(exponent, 2 * self.d)]

    def index(self, p1: int, p2: int) -> 'DisplacementIndex':
        return DisplacementIndex(p1, p2, self.dbar)

    def indices(self, modulus: Optional[int] = None):
        """Iterate all indices of ``Z_m^2`` in lexicographic order, ``m`` defaulting to ``dbar``."""
        m = self.dbar if modulus is None else modulus
        for p1, p2 in itertools.product(range(m), repeat=2):
            yield DisplacementIndex(p1, p2, self.dbar)


_ROOT_CACHE = {}


def _root_table(d: int) -> np.ndarray:
    table = _ROOT_CACHE.get(d)
    if table is None:
        table = np.exp(1j * np.pi * np.arange(2 * d) / d)
        table.setflags(write=False)
        _ROOT_CACHE[d] = table
    return table


@dataclass(frozen=True)
class PhaseRoot:
    """The primitive roots ``omega = e^{2 pi i / d}`` and ``tau = -e^{pi i / d}``."""

    omega: complex
    tau: complex


def phase_root(dim: Dimension) -> PhaseRoot:
    # tau = -e^{i pi/d} = e^{i pi (d+1)/d}
    return PhaseRoot(omega=complex(dim.phase(2)), tau=complex(dim.phase(dim.d + 1)))


@dataclass(frozen=True)
class DisplacementIndex:
    """A pair ``p = (p1, p2)`` in ``Z_dbar^2``, stored reduced to ``[0, dbar)``."""

    p1: int
    p2: int
    dbar: int

    def __post_init__(self) -> None:
        if self.dbar < 1:
            raise ValueError(f"Modulus must be positive, got {self.dbar}")
        object.__setattr__(self, 'p1', int(self.p1) % self.dbar)
        object.__setattr__(self, 'p2', int(self.p2) % self.dbar)

    def __add__(self, other: 'DisplacementIndex') -> 'DisplacementIndex':
        _check_same_modulus(self, other)
        return DisplacementIndex(self.p1 + other.p1, self.p2 + other.p2, self.dbar)

    def __neg__(self) -> 'DisplacementIndex':
        return DisplacementIndex(-self.p1, -self.p2, self.dbar)

    def scale(self, k: int) -> 'DisplacementIndex':
        return DisplacementIndex(k * self.p1, k * self.p2, self.dbar)

    def as_tuple(self) -> Tuple[int, int]:
        return (self.p1, self.p2)


def _check_same_modulus(p: DisplacementIndex, q: DisplacementIndex) -> None:
    if p.dbar != q.dbar:
        raise ValueError(f"Indices live in different groups: Z_{p.dbar} vs Z_{q.dbar}")


def _as_index(dim: Dimension, p: Union[DisplacementIndex, Sequence[int]]) -> DisplacementIndex:
    if isinstance(p, DisplacementIndex):
        if p.dbar != dim.dbar:
            raise ValueError(f"Index modulus {p.dbar} does not match dbar={dim.dbar}")
        return p
    p1, p2 = p
    return DisplacementIndex(p1, p2, dim.dbar)


def shift_and_clock(dim: Dimension) -> Tuple[np.ndarray, np.ndarray]:
    """Return the shift ``w`` (``e_j -> e_{j+1}``) and the clock ``h = diag(omega^j)``."""
    d = dim.d
    w = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    h = np.diag(dim.phase(2 * np.arange(d)))
    return w, h


def displacement(dim: Dimension, p: Union[DisplacementIndex, Sequence[int]]) -> np.ndarray:
    """Build ``D_p = tau^{p1 p2} w^{p1} h^{p2}``.

    Args:
        dim: The dimension.
        p: Index in ``Z_dbar^2`` (a DisplacementIndex or a pair of ints).

    Returns:
        The ``d x d`` unitary matrix ``D_p``.
    """
    p = _as_index(dim, p)
    d = dim.d
    j = np.arange(d)
    # Column j carries tau^{p1 p2} omega^{p2 j} in row j + p1
    exponents = p.p1 * p.p2 * (d + 1) + 2 * p.p2 * j
    mat = np.zeros((d, d), dtype=complex)
    mat[(j + p.p1) % d, j] = dim.phase(exponents)
    return mat


def displacement_stack(dim: Dimension, modulus: Optional[int] = None) -> np.ndarray:
    """All ``D_p`` for ``p`` in ``Z_m^2``, shaped ``(m, m, d, d)``; ``m`` defaults to ``dbar``."""
    m = dim.dbar if modulus is None else modulus
    stack = np.empty((m, m, dim.d, dim.d), dtype=complex)
    for p1 in range(m):
        for p2 in range(m):
            stack[p1, p2] = displacement(dim, (p1, p2))
    return stack


def symplectic_pairing(p: DisplacementIndex, q: DisplacementIndex) -> int:
    """``<p, q> = q1 p2 - q2 p1`` reduced mod ``dbar``."""
    _check_same_modulus(p, q)
    return (q.p1 * p.p2 - q.p2 * p.p1) % p.dbar


def even_periodicity_sign(dim: Dimension, p: DisplacementIndex, q: DisplacementIndex) -> int:
    """Sign relating ``D_{p + d q}`` to ``D_p`` in even dimension.

    Raises:
        ValueError: If ``d`` is odd; there the map is plainly ``d``-periodic.
    """
    if not dim.is_even:
        raise ValueError(f"Sign rule only applies to even d, got d={dim.d}")
    p, q = _as_index(dim, p), _as_index(dim, q)
    return -1 if symplectic_pairing(p, q) % 2 else 1


def is_unitary(mat: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    eye = np.eye(mat.shape[0])
    return bool(np.linalg.norm(mat @ mat.conj().T - eye) < tol)


def dft_unitary(dim: Dimension) -> np.ndarray:
    """The unitary Fourier matrix ``U_{jk} = omega^{jk} / sqrt(d)``.

    It conjugates ``w`` to ``h`` and ``h`` to ``w^{-1}``, so it realizes ``F = [[0,-1],[1,0]]``.
    """
    j = np.arange(dim.d)
    return dim.phase(2 * np.outer(j, j)) / np.sqrt(dim.d)


def apply_matrix(F: np.ndarray, p: DisplacementIndex) -> DisplacementIndex:
    F = np.asarray(F, dtype=np.int64)
    return DisplacementIndex(int(F[0, 0] * p.p1 + F[0, 1] * p.p2),
                             int(F[1, 0] * p.p1 + F[1, 1] * p.p2), p.dbar)


def clifford_conjugate(dim: Dimension, F: np.ndarray, U: Optional[np.ndarray],
                       p: Union[DisplacementIndex, Sequence[int]],
                       q: Union[DisplacementIndex, Sequence[int]] = (0, 0),
                       verify: bool = True, tol: float = UNITARY_TOL) -> Tuple[complex, DisplacementIndex]:
    """Predict ``U D_p U^{-1} = omega^{<q, F p>} D_{F p}`` for ``U = U(F, q)``.

    Args:
        dim: The dimension.
        F: Symplectic 2x2 integer matrix mod ``dbar``.
        U: Unitary realizing ``(F, q)``; required when ``verify`` is set.
        p: Index to conjugate.
        q: Displacement part of the Clifford element.
        verify: Check the prediction numerically against ``U``.
        tol: Frobenius tolerance of the check.

    Returns:
        The phase and the image index ``F p``.

    Raises:
        ValueError: If ``F`` is not in ``SL_2(Z_dbar)``.
        VerificationError: If ``U`` does not conjugate ``D_p`` as predicted.
    """
    p, q = _as_index(dim, p), _as_index(dim, q)
    F = np.asarray(F, dtype=np.int64) % dim.dbar
    det = int(F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]) % dim.dbar
    if det != 1 % dim.dbar:
        raise ValueError(f"F must have determinant 1 mod {dim.dbar}, got {det}")

    image = apply_matrix(F, p)
    phase = complex(dim.phase(2 * symplectic_pairing(q, image)))

    if verify:
        if U is None:
            raise ValueError("A unitary is required to verify the conjugation")
        lhs = U @ displacement(dim, p) @ U.conj().T
        residual = float(np.linalg.norm(lhs - phase * displacement(dim, image)))
        if residual > tol:
            raise VerificationError(
                f"U D_{p.as_tuple()} U^-1 differs from the predicted operator by {residual:.3e}",
                index=p.as_tuple(), residual=residual)
    return phase, image


def _displacement_lifts(dim: Dimension, A: np.ndarray, tol: float) -> List[Tuple[DisplacementIndex, complex]]:
    """All ``(q, c)`` with ``A = c D_q``, ``q`` ranging over the sign lifts in ``Z_dbar^2``."""
    d = dim.d
    for p1, p2 in itertools.product(range(d), repeat=2):
        base = displacement(dim, (p1, p2))
        c = np.trace(base.conj().T @ A) / d
        if abs(abs(c) - 1.0) < 1e-8 and np.linalg.norm(A - c * base) < tol:
            shifts = [(0, 0)] if not dim.is_even else list(itertools.product((0, d), repeat=2))
            lifts = []
            for s1, s2 in shifts:
                cand = dim.index(p1 + s1, p2 + s2)
                lifts.append((cand, complex(np.trace(displacement(dim, cand).conj().T @ A) / d)))
            return lifts
    raise VerificationError("Matrix is not proportional to a displacement operator")


def symplectic_action(dim: Dimension, U: np.ndarray, tol: float = UNITARY_TOL) -> Tuple[np.ndarray, Tuple[complex, complex]]:
    """Read off the matrix ``F`` with ``U D_p U^{-1} ~ D_{F p}`` for a Clifford unitary ``U``.

    The columns of ``F`` are the images of ``(1,0)`` and ``(0,1)``. For even ``d`` each column
    is only known up to a sign lift; the lift pair with determinant 1 whose phases are
    closest to 1 is returned, which is exact for displacement-free Clifford elements.

    Returns:
        ``F`` as an integer array mod ``dbar`` and the two column phases.

    Raises:
        VerificationError: If ``U`` does not normalize the Heisenberg group.
    """
    if not is_unitary(U, tol):
        raise VerificationError("Matrix is not unitary")
    first, second = (_displacement_lifts(dim, U @ displacement(dim, e) @ U.conj().T, tol)
                     for e in ((1, 0), (0, 1)))
    best = None
    for (a, ca), (b, cb) in itertools.product(first, second):
        if (a.p1 * b.p2 - b.p1 * a.p2 - 1) % dim.dbar:
            continue
        score = abs(ca - 1) + abs(cb - 1)
        if best is None or score < best[0] - 1e-12:
            best = (score, a, b, ca, cb)
    if best is None:
        raise VerificationError("No symplectic lift of the detected action")
    _, a, b, ca, cb = best
    F = np.array([[a.p1, b.p1], [a.p2, b.p2]], dtype=np.int64)
    logger.debug(f"Detected symplectic action {F.tolist()} with phases {(ca, cb)}")
    return F, (ca, cb)


def d3_clifford_example(phi: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The d=3 Clifford matrix that carries the real fiducial family to the ``(0, 1, -e^{it})`` one.

    Args:
        phi: Angle of the real vector ``(cos phi, cos(phi + 2pi/3), cos(phi + 4pi/3))``.

    Returns:
        ``(M, z3, M z3)``; the image is proportional to ``(omega^2 e^{2i phi}, 1, 0)``.
    """
    dim = Dimension(3)
    w1, w2 = dim.phase(2), dim.phase(4)
    M = np.array([[w2, w1, 1], [1, w1, w2], [1, 1, 1]], dtype=complex) / np.sqrt(3)
    z3 = np.cos(phi + 2 * np.pi * np.arange(3) / 3).astype(complex)
    return M, z3, M @ z3


def d3_nine_points() -> np.ndarray:
    """The nine vectors ``w^j (0, 1, -omega^k) / sqrt(2)`` as rows, a SIC in ``CP^2``."""
    dim = Dimension(3)
    w, _ = shift_and_clock(dim)
    rows = []
    for k in range(3):
        base = np.array([0, 1, -dim.phase(2 * k)], dtype=complex) / np.sqrt(2)
        for j in range(3):
            rows.append(np.linalg.matrix_power(w, j) @ base)
    return np.array(rows)

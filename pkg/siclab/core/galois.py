"""Symmetries of overlap tables, the groups ``M = Z_dbar[I, F]^x`` and their orbits on ``Z_dbar^2``.

The orbit count of ``M`` is compared with the number of ideal divisors of ``(dbar)`` in
the quadratic field of :mod:`siclab.core.quadfield`.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import factorint, isprime
from sympy.ntheory.modular import crt

from siclab.core.heisenberg import Dimension, VerificationError
from siclab.core.overlap import OverlapTable
from siclab.core.quadfield import (FieldData, QuadIntResidue, field_data, fundamental_unit,
                                   ideal_divisor_count, level_divisors, residue_order,
                                   unit_group_order, unit_group_structure)

logger = logging.getLogger(__name__)

EXHAUSTIVE_DBAR_LIMIT = 40
SYMMETRY_TOL = 1e-8


class SearchGuardError(ValueError):
    """An exhaustive scan was requested beyond the configured ``dbar`` limit."""


class FiducialType(str, Enum):
    Z = 'z'
    A4 = 'a4'
    A6 = 'a6'
    A8 = 'a8'


@dataclass(frozen=True)
class Mat2Residue:
    """A 2x2 integer matrix ``[[a, b], [c, e]]`` reduced mod ``modulus``."""

    entries: Tuple[int, int, int, int]
    modulus: int

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError(f"Modulus must be positive, got {self.modulus}")
        if len(self.entries) != 4:
            raise ValueError(f"Expected 4 entries, got {len(self.entries)}")
        object.__setattr__(self, 'entries', tuple(int(x) % self.modulus for x in self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], modulus: int) -> 'Mat2Residue':
        (a, b), (c, e) = rows
        return cls((a, b, c, e), modulus)

    @classmethod
    def identity(cls, modulus: int) -> 'Mat2Residue':
        return cls.scalar(1, modulus)

    @classmethod
    def scalar(cls, k: int, modulus: int) -> 'Mat2Residue':
        return cls((k, 0, 0, k), modulus)

    def __matmul__(self, other: 'Mat2Residue') -> 'Mat2Residue':
        if self.modulus != other.modulus:
            raise ValueError(f"Moduli differ: {self.modulus} vs {other.modulus}")
        a, b, c, e = self.entries
        x, y, z, w = other.entries
        return Mat2Residue((a * x + b * z, a * y + b * w, c * x + e * z, c * y + e * w), self.modulus)

    def __add__(self, other: 'Mat2Residue') -> 'Mat2Residue':
        return Mat2Residue(tuple(x + y for x, y in zip(self.entries, other.entries)), self.modulus)

    def scale(self, k: int) -> 'Mat2Residue':
        return Mat2Residue(tuple(k * x for x in self.entries), self.modulus)

    def __pow__(self, k: int) -> 'Mat2Residue':
        result, base = Mat2Residue.identity(self.modulus), self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def det(self) -> int:
        a, b, c, e = self.entries
        return (a * e - b * c) % self.modulus

    def trace(self) -> int:
        return (self.entries[0] + self.entries[3]) % self.modulus

    def is_invertible(self) -> bool:
        return math.gcd(self.det(), self.modulus) == 1

    def reduce(self, modulus: int) -> 'Mat2Residue':
        return Mat2Residue(self.entries, modulus)

    def apply(self, p: Sequence[int]) -> Tuple[int, int]:
        a, b, c, e = self.entries
        return ((a * p[0] + b * p[1]) % self.modulus, (c * p[0] + e * p[1]) % self.modulus)

    def apply_arrays(self, p1: np.ndarray, p2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b, c, e = self.entries
        return (a * p1 + b * p2) % self.modulus, (c * p1 + e * p2) % self.modulus

    def rows(self) -> List[List[int]]:
        a, b, c, e = self.entries
        return [[a, b], [c, e]]


def _check_order_three(F: Mat2Residue) -> None:
    n = F.modulus
    if (F ** 3) != Mat2Residue.identity(n) or F.trace() != (-1) % n:
        raise ValueError(f"{F.rows()} is not of order 3 with trace -1 mod {n}")


def zauner_matrix(dim: Dimension) -> Tuple[Mat2Residue, Mat2Residue]:
    """``F_z = [[0, -1], [1, -1]]`` and its order-6 lift ``[[0, d-1], [d+1, d-1]]`` mod ``dbar``.

    Raises:
        VerificationError: If one of the defining identities fails.
    """
    d, n = dim.d, dim.dbar
    F_z = Mat2Residue((0, -1, 1, -1), n)
    F_hat = Mat2Residue((0, d - 1, d + 1, d - 1), n)
    identity = Mat2Residue.identity(n)
    if F_z ** 3 != identity or F_z.trace() != n - 1:
        raise VerificationError(f"F_z is not of order 3 with trace -1 mod {n}")
    if dim.is_even:
        if F_hat ** 6 != identity or F_hat ** 2 != F_z ** 2 or F_hat ** 3 != Mat2Residue.scalar(d + 1, n):
            raise VerificationError(f"Order-6 Zauner lift identities fail mod {n}")
    elif F_hat != F_z:
        raise VerificationError(f"Odd d={d} must have F_hat_z = F_z")
    return F_z, F_hat


def _crt_matrix(A: Mat2Residue, B: Mat2Residue) -> Mat2Residue:
    moduli = [A.modulus, B.modulus]
    entries = tuple(int(crt(moduli, [x, y])[0]) for x, y in zip(A.entries, B.entries))
    return Mat2Residue(entries, A.modulus * B.modulus)


def _three_split(dim: Dimension) -> int:
    n = dim.dbar
    if n % 3 or n % 9 == 0:
        raise ValueError(f"Type-a matrices need 3 to divide dbar={n} exactly once")
    return n // 3


def type_a_zauner_matrix(dim: Dimension) -> Mat2Residue:
    """Order-3, trace -1 matrix congruent to ``I`` mod 3 and to ``F_z`` mod ``dbar/3``."""
    m = _three_split(dim)
    F = _crt_matrix(Mat2Residue.identity(3), Mat2Residue((0, -1, 1, -1), m))
    _check_order_three(F)
    return F


def overlap_symmetry_group(dim: Dimension, table: OverlapTable, tol: float = SYMMETRY_TOL,
                           limit: int = EXHAUSTIVE_DBAR_LIMIT) -> List[Mat2Residue]:
    """All ``G`` in ``GL_2(Z_dbar)`` with ``Phi(Gp) = Phi(p)`` for every ``p``, within ``tol``.

    Columns of ``G`` are the images of ``(1, 0)`` and ``(0, 1)``, so candidates are first
    restricted to points whose overlap matches there; survivors are checked on the full table.

    Raises:
        SearchGuardError: If ``dbar`` exceeds ``limit``.
    """
    n = dim.dbar
    if n > limit:
        raise SearchGuardError(f"Exhaustive symmetry scan needs dbar <= {limit}, got {n}")
    if table.dim != dim:
        raise ValueError(f"Table is for d={table.dim.d}, expected d={dim.d}")
    values = table.values
    col1 = np.argwhere(np.abs(values - values[1, 0]) <= tol)
    col2 = np.argwhere(np.abs(values - values[0, 1]) <= tol)
    logger.info(f"Scanning {len(col1) * len(col2)} candidate symmetries for d={dim.d}")

    p1, p2 = np.meshgrid(np.arange(n), np.arange(n), indexing='ij')
    group = []
    for a, c in col1:
        for b, e in col2:
            G = Mat2Residue((a, b, c, e), n)
            if not G.is_invertible():
                continue
            q1, q2 = G.apply_arrays(p1, p2)
            if np.max(np.abs(values[q1, q2] - values)) <= tol:
                group.append(G)
    group.sort(key=lambda G: G.entries)

    members = set(group)
    closed = all((G @ H) in members for G in group for H in group)
    if not closed:
        logger.warning(f"Detected symmetries for d={dim.d} are not closed under products; tol={tol} may be too loose")
    logger.info(f"Found {len(group)} symmetries of the overlap table for d={dim.d}")
    return group


def _unit_algebra(F: Mat2Residue) -> List[Mat2Residue]:
    """Distinct invertible elements ``aI + bF`` over ``Z_n``, ``n`` the modulus of ``F``.

    When ``F`` is scalar modulo a prime factor of ``n`` different pairs ``(a, b)`` can give
    the same matrix; each appears once.
    """
    n = F.modulus
    identity = Mat2Residue.identity(n)
    elements: Dict[Mat2Residue, None] = {}
    for a in range(n):
        for b in range(n):
            G = identity.scale(a) + F.scale(b)
            if G.is_invertible():
                elements.setdefault(G)
    return list(elements)


def build_M(dim: Dimension, F: Mat2Residue) -> List[Mat2Residue]:
    """``M = Z_dbar[I, F]^x`` for an order-3, trace -1 matrix ``F``.

    Raises:
        ValueError: If ``F`` has the wrong modulus, order or trace.
    """
    if F.modulus != dim.dbar:
        raise ValueError(f"F is reduced mod {F.modulus}, expected dbar={dim.dbar}")
    _check_order_three(F)
    M = _unit_algebra(F)
    logger.debug(f"|M| = {len(M)} for d={dim.d}")
    return M


def build_M_type_a(dim: Dimension, fd: Optional[FieldData] = None) -> List[Mat2Residue]:
    """``M_3 x Z_{dbar/3}[I, F_z]^x`` glued by CRT.

    ``M_3`` is the unit group of the regular representation of ``O_K/(3)``, realized by the
    companion matrix of ``omega``, so this group is isomorphic to ``(O_K/(dbar))^x``.
    """
    m = _three_split(dim)
    fd = fd or field_data(dim.d)
    W = Mat2Residue((0, fd.const_omega, 1, fd.trace_omega), 3)
    M3 = _unit_algebra(W)
    Mm = _unit_algebra(Mat2Residue((0, -1, 1, -1), m))
    return [_crt_matrix(A, B) for A in M3 for B in Mm]


def _generating_set(M: Sequence[Mat2Residue]) -> List[Mat2Residue]:
    """Greedy generators: keep each element not already in the span of the earlier ones."""
    n = M[0].modulus
    identity = Mat2Residue.identity(n)
    gens: List[Mat2Residue] = []
    span = {identity}
    for G in M:
        if G in span:
            continue
        gens.append(G)
        frontier = list(span)
        while frontier:
            fresh = []
            for x in frontier:
                for g in gens:
                    y = x @ g
                    if y not in span:
                        span.add(y)
                        fresh.append(y)
            frontier = fresh
    if len(span) != len(set(M)):
        logger.warning(f"Elements generate a group of order {len(span)}, but {len(set(M))} were given")
    return gens


class UnionFind:
    """Disjoint sets over ``0 .. n-1`` with path compression and union by size."""

    def __init__(self, n: int) -> None:
        self.parent: List[int] = list(range(n))
        self.size: List[int] = [1] * n

    def find(self, x: int) -> int:
        """Root of the set holding ``x``."""
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of ``x`` and ``y``; False if they were already one set."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        return True

    def groups(self) -> List[List[int]]:
        """Members of every set, each list in increasing order."""
        members: Dict[int, List[int]] = {}
        for i in range(len(self.parent)):
            members.setdefault(self.find(i), []).append(i)
        return list(members.values())


@dataclass
class Orbit:
    rep: Tuple[int, int]
    size: int
    gcd_level: int

    def to_dict(self) -> Dict[str, Any]:
        return {'rep': list(self.rep), 'size': self.size, 'gcd_level': self.gcd_level}


@dataclass
class OrbitReport:
    d: int
    dbar: int
    group_order: int
    orbits: List[Orbit] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.orbits)

    @property
    def total(self) -> int:
        return sum(o.size for o in self.orbits)

    def to_json(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'dbar': self.dbar,
            'group_order': self.group_order,
            'orbit_count': self.count,
            'orbits': [o.to_dict() for o in self.orbits],
        }


def m_orbits(dim: Dimension, M: Sequence[Mat2Residue]) -> OrbitReport:
    """Decompose ``Z_dbar^2`` into orbits of ``p -> Gp`` with a union-find over a generating set.

    Raises:
        ValueError: If ``M`` is empty or reduced mod something other than ``dbar``.
        VerificationError: If an orbit mixes points of different ``gcd(p1, p2, dbar)``.
    """
    n = dim.dbar
    if not M:
        raise ValueError("M must contain at least the identity")
    if any(G.modulus != n for G in M):
        raise ValueError(f"All elements of M must be reduced mod dbar={n}")
    gens = _generating_set(M)

    points = np.arange(n * n)
    p1, p2 = points // n, points % n
    uf = UnionFind(n * n)
    for g in gens:
        q1, q2 = g.apply_arrays(p1, p2)
        for i, j in zip(points.tolist(), (q1 * n + q2).tolist()):
            uf.union(i, j)

    levels = np.gcd(np.gcd(p1, p2), n)
    orbits = []
    for members in uf.groups():
        rep = min(members)
        member_levels = set(levels[members].tolist())
        if len(member_levels) != 1:
            raise VerificationError(f"Orbit of {divmod(rep, n)} crosses gcd levels {sorted(member_levels)}",
                                    index=divmod(rep, n))
        orbits.append(Orbit(divmod(rep, n), len(members), member_levels.pop()))
    orbits.sort(key=lambda o: o.rep)

    report = OrbitReport(dim.d, n, len(M), orbits)
    if report.total != n * n:
        raise VerificationError(f"Orbit sizes sum to {report.total}, expected {n * n}")
    logger.info(f"d={dim.d}: {report.count} orbits of a group of order {len(M)} on Z_{n}^2")
    return report


def classify_type(d: int) -> FiducialType:
    """Predicted type of an algebraic centred fiducial in dimension ``d``."""
    D = field_data(d).D
    if d % 3 == 0 and D % 3 == 1:
        return FiducialType.A4
    if d % 27 == 3:
        return FiducialType.A6
    if d % 3 == 0 and D % 3 == 2:
        return FiducialType.A8
    return FiducialType.Z


def j_isomorphism_criteria(d: int) -> bool:
    """``Z_dbar[I, F_z]^x`` is isomorphic to ``(O_K/(dbar))^x``."""
    if d < 4:
        raise ValueError(f"d must be at least 4, got {d}")
    if math.gcd(d, 3) == 1:
        return True
    return field_data(d).D % 3 == 0 and d % 27 != 3


@dataclass
class CorrespondenceReport:
    orbit_report: OrbitReport
    fiducial_type: FiducialType
    divisor_count: int
    treat3_as_ramified: bool
    algebraic_type_a: Optional[Dict[str, Any]] = None

    @property
    def orbit_count(self) -> int:
        return self.orbit_report.count

    @property
    def match(self) -> bool:
        return self.orbit_count == self.divisor_count

    def to_json(self) -> Dict[str, Any]:
        data = self.orbit_report.to_json()
        data.update({
            'type': self.fiducial_type.value,
            'divisor_count': self.divisor_count,
            'match': self.match,
            'treat3_as_ramified': self.treat3_as_ramified,
        })
        if self.algebraic_type_a is not None:
            data['algebraic_type_a'] = self.algebraic_type_a
        return data


def orbit_divisor_correspondence(d: int, limit: int = EXHAUSTIVE_DBAR_LIMIT) -> CorrespondenceReport:
    """Compare the orbit count of ``Z_dbar[I, F_z]^x`` with the ideal divisors of ``(dbar)``.

    When the two groups are not isomorphic, 3 is counted as ramified. Type-a dimensions also
    report the orbits of :func:`build_M_type_a` against the true splitting of 3, and under
    ``crt_zauner`` the group generated by :func:`type_a_zauner_matrix`.

    Raises:
        SearchGuardError: If ``dbar`` exceeds ``limit``.
    """
    dim = Dimension(d)
    if dim.dbar > limit:
        raise SearchGuardError(f"Orbit decomposition needs dbar <= {limit}, got {dim.dbar}")
    fd = field_data(d)
    ftype = classify_type(d)
    treat3 = not j_isomorphism_criteria(d)

    F_z, _ = zauner_matrix(dim)
    orbits = m_orbits(dim, build_M(dim, F_z))
    report = CorrespondenceReport(orbits, ftype, ideal_divisor_count(fd, d, treat3), treat3)

    if ftype != FiducialType.Z:
        M_a = build_M_type_a(dim, fd)
        orbits_a = m_orbits(dim, M_a)
        divisors_a = ideal_divisor_count(fd, d)
        M_crt = build_M(dim, type_a_zauner_matrix(dim))
        report.algebraic_type_a = {
            'group_order': len(M_a),
            'orbit_count': orbits_a.count,
            'divisor_count': divisors_a,
            'match': orbits_a.count == divisors_a,
            'crt_zauner': {'group_order': len(M_crt), 'orbit_count': m_orbits(dim, M_crt).count},
        }
    logger.info(f"d={d} ({ftype.value}): {report.orbit_count} orbits, {report.divisor_count} divisors")
    return report


def one_orbit_predicate(d: int) -> bool:
    """True iff ``d`` is an odd prime congruent to 2 mod 3, i.e. ``M`` has a single non-zero orbit."""
    if d < 4:
        raise ValueError(f"d must be at least 4, got {d}")
    predicate = bool(isprime(d) and d % 2 == 1 and d % 3 == 2)
    count = ideal_divisor_count(field_data(d), d, not j_isomorphism_criteria(d))
    if predicate != (count == 2):
        logger.warning(f"d={d}: one-orbit predicate {predicate} disagrees with divisor count {count}")
    return predicate


def _plus_minus_order(u: QuadIntResidue) -> int:
    """``|<-1, u>|`` in ``(O_K/(n))^x``."""
    order = residue_order(u)
    minus_one = -u.one()
    power = u.one()
    for _ in range(order):
        if power == minus_one:
            return order
        power = power * u
    return 2 * order


@dataclass
class RayClassOrders:
    d: int
    order_OK_units: int
    order_uf_subgroup: int
    per_divisor: List[Dict[str, int]]

    @property
    def quotient_order(self) -> int:
        return self.order_OK_units // self.order_uf_subgroup

    def to_dict(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'order_OK_units': self.order_OK_units,
            'order_uf_subgroup': self.order_uf_subgroup,
            'quotient_order': self.quotient_order,
            'per_divisor': self.per_divisor,
        }


def ray_class_group_orders(d: int) -> RayClassOrders:
    """``|(O_K/(dbar))^x|`` against the subgroup generated by ``-1`` and the fundamental unit.

    The quotient is reported as is; the sign bookkeeping between this and the Galois group
    of the overlap field is left to the caller. ``per_divisor`` repeats the count for every
    rational level ``m | dbar``.
    """
    dim = Dimension(d)
    fd = field_data(d)
    n = dim.dbar
    structure_order = 1
    for p, k in _prime_powers(n):
        structure_order *= math.prod(unit_group_structure(fd, p, k))
    if structure_order != unit_group_order(fd, n):
        logger.warning(f"d={d}: structure order {structure_order} differs from {unit_group_order(fd, n)}")

    u_f = fundamental_unit(fd)
    per_divisor = []
    for m in level_divisors(n):
        units = unit_group_order(fd, m)
        sub = _plus_minus_order(u_f.mod(m))
        per_divisor.append({'divisor': m, 'order_OK_units': units, 'order_uf_subgroup': sub,
                            'quotient_order': units // sub})
    return RayClassOrders(d, structure_order, _plus_minus_order(u_f.mod(n)), per_divisor)


def _prime_powers(n: int) -> Iterable[Tuple[int, int]]:
    return sorted(factorint(n).items())


@dataclass
class ProjectiveOrbits:
    p: int
    sizes: List[int]
    quotient_order: int

    @property
    def free_orbits(self) -> int:
        return sum(1 for s in self.sizes if s == self.quotient_order)

    @property
    def fixed_points(self) -> int:
        return sum(1 for s in self.sizes if s == 1)


def projective_orbits(p: int) -> ProjectiveOrbits:
    """Orbits of ``M/Z`` on the ``p + 1`` points of the projective line over ``Z_p``."""
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    M = _unit_algebra(Mat2Residue((0, -1, 1, -1), p))

    def line(x: int, y: int) -> int:
        # (1, y) -> y and (0, 1) -> p
        if x % p:
            return (y * pow(x, -1, p)) % p
        return p

    uf = UnionFind(p + 1)
    points = [(1, y) for y in range(p)] + [(0, 1)]
    for G in M:
        for idx, point in enumerate(points):
            uf.union(idx, line(*G.apply(point)))
    sizes = sorted((len(g) for g in uf.groups()), reverse=True)
    return ProjectiveOrbits(p, sizes, len(M) // (p - 1))


def symmetry_commutes_with_M(S: Sequence[Mat2Residue], M: Sequence[Mat2Residue]) -> bool:
    return all(G @ H == H @ G for G in S for H in M)

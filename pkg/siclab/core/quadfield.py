"""Arithmetic of the real quadratic field K = Q(sqrt D) attached to a dimension d.

``D`` is the square-free part of ``(d-3)(d+1)`` and ``O_K = Z[omega]`` with
``omega = sqrt D`` when ``D`` is not 1 mod 4 and ``omega = (1 + sqrt D)/2`` otherwise.
Elements ``a + b omega`` are kept as exact Python integers; residues mod ``n`` as
reduced pairs.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from sympy import Poly, divisors, factorint, isprime, symbols

logger = logging.getLogger(__name__)

SQRT_D = 'sqrtD'
HALF = 'half'

SPLIT = 'split'
INERT = 'inert'
RAMIFIED = 'ramified'

MAX_CF_STEPS = 10 ** 6


def squarefree_part(n: int) -> int:
    """Square-free part of a positive integer."""
    if n < 1:
        raise ValueError(f"Square-free part needs a positive integer, got {n}")
    part = 1
    for p, k in factorint(n).items():
        if k % 2:
            part *= p
    return part


def dbar_of(d: int) -> int:
    return d if d % 2 else 2 * d


@dataclass(frozen=True)
class FieldData:
    """The field ``Q(sqrt D)`` and the dimension it was derived from (if any)."""

    D: int
    omega_kind: str
    d: Optional[int] = None

    @property
    def trace_omega(self) -> int:
        """``t`` in ``omega^2 = t omega + c``."""
        return 1 if self.omega_kind == HALF else 0

    @property
    def const_omega(self) -> int:
        """``c`` in ``omega^2 = t omega + c``."""
        return (self.D - 1) // 4 if self.omega_kind == HALF else self.D

    @property
    def omega_value(self) -> float:
        root = math.sqrt(self.D)
        return (1 + root) / 2 if self.omega_kind == HALF else root


def quadratic_field(D: int) -> FieldData:
    """FieldData for a square-free ``D > 1``."""
    if D < 2 or squarefree_part(D) != D:
        raise ValueError(f"D must be a square-free integer greater than 1, got {D}")
    return FieldData(D, HALF if D % 4 == 1 else SQRT_D)


def field_data(d: int) -> FieldData:
    """Field attached to dimension ``d >= 4``.

    Raises:
        ValueError: For ``d <= 3``, where ``(d-3)(d+1)`` is not positive.
    """
    if d <= 3:
        raise ValueError(f"The quadratic field is defined for d >= 4, got d={d}")
    D = squarefree_part((d - 3) * (d + 1))
    fd = FieldData(D, HALF if D % 4 == 1 else SQRT_D, d)
    logger.debug(f"d={d}: D={D} ({fd.omega_kind})")
    return fd


@dataclass(frozen=True)
class QuadInt:
    """Exact algebraic integer ``a + b omega``."""

    a: int
    b: int
    field: FieldData

    def __mul__(self, other: 'QuadInt') -> 'QuadInt':
        t, c = self.field.trace_omega, self.field.const_omega
        a, b, x, y = self.a, self.b, other.a, other.b
        return QuadInt(a * x + b * y * c, a * y + b * x + b * y * t, self.field)

    def __pow__(self, k: int) -> 'QuadInt':
        if k < 0:
            raise ValueError("Negative powers are not supported")
        result, base = QuadInt(1, 0, self.field), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def norm(self) -> int:
        t, c = self.field.trace_omega, self.field.const_omega
        return self.a * self.a + t * self.a * self.b - c * self.b * self.b

    def trace(self) -> int:
        return 2 * self.a + self.field.trace_omega * self.b

    def rational_part(self) -> Fraction:
        """``T/2`` in the presentation ``(T + U sqrt D)/2``."""
        return Fraction(self.trace(), 2)

    def value(self) -> float:
        return self.a + self.b * self.field.omega_value

    def mod(self, n: int) -> 'QuadIntResidue':
        return QuadIntResidue(self.a, self.b, n, self.field)

    def as_pair(self) -> List[int]:
        return [self.a, self.b]


@dataclass(frozen=True)
class QuadIntResidue:
    """``a + b omega`` in ``O_K / (n)``."""

    a: int
    b: int
    modulus: int
    field: FieldData

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError(f"Modulus must be positive, got {self.modulus}")
        object.__setattr__(self, 'a', self.a % self.modulus)
        object.__setattr__(self, 'b', self.b % self.modulus)

    def __mul__(self, other: 'QuadIntResidue') -> 'QuadIntResidue':
        t, c = self.field.trace_omega, self.field.const_omega
        a, b, x, y = self.a, self.b, other.a, other.b
        return QuadIntResidue(a * x + b * y * c, a * y + b * x + b * y * t, self.modulus, self.field)

    def __neg__(self) -> 'QuadIntResidue':
        return QuadIntResidue(-self.a, -self.b, self.modulus, self.field)

    def __pow__(self, k: int) -> 'QuadIntResidue':
        result, base = self.one(), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def one(self) -> 'QuadIntResidue':
        return QuadIntResidue(1, 0, self.modulus, self.field)

    def is_one(self) -> bool:
        return self.a == 1 % self.modulus and self.b == 0

    def norm(self) -> int:
        return QuadInt(self.a, self.b, self.field).norm() % self.modulus

    def is_invertible(self) -> bool:
        return math.gcd(self.norm(), self.modulus) == 1

    def key(self) -> Tuple[int, int]:
        return (self.a, self.b)


def _floor_surd(P: int, Q: int, D: int) -> int:
    """``floor((P + sqrt D) / Q)`` for non-square ``D`` and ``Q != 0``."""
    s = math.isqrt(D)
    if Q > 0:
        return (P + s) // Q
    # sqrt D is irrational, so the quotient is never an integer
    return -((P + s) // (-Q)) - 1


def fundamental_unit(fd: FieldData) -> QuadInt:
    """Fundamental unit ``u_f > 1`` of ``O_K`` by continued fractions.

    Expands ``(P0 + sqrt D)/Q0`` with ``(P0, Q0) = (0, 1)`` or ``(1, 2)``; the first
    convergent where ``Q`` returns to ``Q0`` solves ``G^2 - D B^2 = +-Q0^2``.
    """
    D = fd.D
    P, Q = (1, 2) if fd.omega_kind == HALF else (0, 1)
    Q0 = Q
    G_prev, G = -P, Q0
    B_prev, B = 1, 0
    for _ in range(MAX_CF_STEPS):
        a = _floor_surd(P, Q, D)
        G_prev, G = G, a * G + G_prev
        B_prev, B = B, a * B + B_prev
        P = a * Q - P
        Q = (D - P * P) // Q
        if Q == Q0:
            break
    else:
        raise ValueError(f"Continued fraction for D={D} did not close")

    if fd.omega_kind == HALF:
        unit = QuadInt((G - B) // 2, B, fd)
    else:
        unit = QuadInt(G, B, fd)
    if abs(unit.norm()) != 1:
        raise ValueError(f"Continued fraction produced a non-unit {unit.as_pair()} for D={D}")
    return unit


def minimal_unit_search(fd: FieldData, max_b: int = 10 ** 7) -> QuadInt:
    """Brute-force the unit ``a + b omega > 1`` with the smallest ``b > 0``."""
    D = fd.D
    for b in range(1, max_b + 1):
        # Norm -1 first: for equal b it is the smaller of the two
        for sign in (-1, 1):
            if fd.omega_kind == HALF:
                disc = D * b * b + 4 * sign
                s = math.isqrt(disc) if disc >= 0 else -1
                if s >= 0 and s * s == disc and (s - b) % 2 == 0:
                    return QuadInt((s - b) // 2, b, fd)
            else:
                sq = D * b * b + sign
                a = math.isqrt(sq) if sq >= 0 else -1
                if a > 0 and a * a == sq:
                    return QuadInt(a, b, fd)
    raise ValueError(f"No unit with b <= {max_b} for D={D}")


@dataclass
class NormOneUnit:
    u_f: QuadInt
    u_D: QuadInt
    r: int
    order_mod_dbar: int
    expected_order: int

    @property
    def order_matches(self) -> bool:
        return self.order_mod_dbar == self.expected_order


def norm_one_unit_and_r(fd: FieldData, d: int) -> NormOneUnit:
    """The norm-one unit ``u_D`` and the least ``r`` with rational part of ``u_D^r`` equal to ``(d-1)/2``.

    Raises:
        ValueError: If no such ``r`` exists within four times the order of ``u_D`` mod ``dbar``.
    """
    if d < 4:
        raise ValueError(f"d must be at least 4, got {d}")
    u_f = fundamental_unit(fd)
    u_D = u_f if u_f.norm() == 1 else u_f * u_f
    dbar = dbar_of(d)
    order = residue_order(u_D.mod(dbar))

    bound = 4 * order
    power = u_D
    r = None
    for k in range(1, bound + 1):
        if power.trace() == d - 1:
            r = k
            break
        power = power * u_D
    if r is None:
        raise ValueError(f"No power u_D^r with rational part (d-1)/2 found for d={d} (r <= {bound})")

    expected = 3 * (dbar // d) * r
    result = NormOneUnit(u_f, u_D, r, order, expected)
    if not result.order_matches:
        logger.warning(f"d={d}: order of u_D mod {dbar} is {order}, expected {expected}")
    return result


def splitting_by_minimal_polynomial(fd: FieldData, p: int) -> str:
    """Decomposition of ``p`` read from the factorization of ``x^2 - t x - c`` over GF(p)."""
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    x = symbols('x')
    _, factors = Poly(x ** 2 - fd.trace_omega * x - fd.const_omega, x, modulus=p).factor_list()
    if len(factors) == 1 and factors[0][1] == 1:
        return INERT
    if any(multiplicity > 1 for _, multiplicity in factors):
        return RAMIFIED
    return SPLIT


def prime_splitting(fd: FieldData, p: int) -> str:
    """Splitting type of a prime ``p`` dividing ``dbar``.

    ``p = 1 mod 3`` splits, ``p = 2 mod 3`` is inert, and ``3`` splits, ramifies or stays
    inert as ``D`` is 1, 0 or 2 mod 3.

    Raises:
        ValueError: If the field has no dimension or ``p`` does not divide ``dbar``.
    """
    if fd.d is None:
        raise ValueError("Prime splitting by congruence needs the dimension of the field")
    if not isprime(p) or dbar_of(fd.d) % p:
        raise ValueError(f"{p} is not a prime factor of dbar={dbar_of(fd.d)}")
    if p == 3:
        kind = {0: RAMIFIED, 1: SPLIT, 2: INERT}[fd.D % 3]
    else:
        kind = SPLIT if p % 3 == 1 else INERT
    check = splitting_by_minimal_polynomial(fd, p)
    if check != kind:
        logger.warning(f"d={fd.d}, p={p}: congruence rule gives {kind}, minimal polynomial gives {check}")
    return kind


@dataclass(frozen=True)
class PrimeExponents:
    """Exponents of the primes of ``O_K`` above ``p`` in an ideal divisor."""

    p: int
    kind: str
    exponents: Tuple[int, ...]


@dataclass(frozen=True)
class IdealDivisor:
    factors: Tuple[PrimeExponents, ...]

    def norm(self) -> int:
        """Absolute norm of the ideal."""
        total = 1
        for f in self.factors:
            if f.kind == INERT:
                total *= f.p ** (2 * f.exponents[0])
            else:
                total *= f.p ** sum(f.exponents)
        return total


@dataclass
class IdealDivisorReport:
    divisors: List[IdealDivisor]

    @property
    def count(self) -> int:
        return len(self.divisors)


def ideal_divisors(fd: FieldData, d: int, treat3_as_ramified: bool = False) -> IdealDivisorReport:
    """All ideal divisors of ``(dbar)`` as exponent vectors over its prime factors."""
    if d < 4:
        raise ValueError(f"d must be at least 4, got {d}")
    fd = fd if fd.d == d else FieldData(fd.D, fd.omega_kind, d)
    per_prime = []
    for p, r in sorted(factorint(dbar_of(d)).items()):
        kind = RAMIFIED if (p == 3 and treat3_as_ramified) else prime_splitting(fd, p)
        if kind == SPLIT:
            choices = [tuple(e) for e in itertools.product(range(r + 1), repeat=2)]
        elif kind == INERT:
            choices = [(e,) for e in range(r + 1)]
        else:
            choices = [(e,) for e in range(2 * r + 1)]
        per_prime.append([PrimeExponents(p, kind, e) for e in choices])
    divisors_ = [IdealDivisor(tuple(combo)) for combo in itertools.product(*per_prime)]
    return IdealDivisorReport(divisors_)


def ideal_divisor_count(fd: FieldData, d: int, treat3_as_ramified: bool = False) -> int:
    return ideal_divisors(fd, d, treat3_as_ramified).count


def unit_group_structure(fd: FieldData, p: int, k: int) -> List[int]:
    """Cyclic factor orders of ``(O_K / (p^k))^x`` with trivial factors dropped.

    Raises:
        ValueError: Outside the cases covered: ``p = 2`` needs ``k >= 2`` and ``2`` inert,
            ``p = 3`` ramified needs ``D != 3 mod 9`` when ``k >= 2``, and primes above 3
            cannot ramify.
    """
    if not isprime(p) or k < 1:
        raise ValueError(f"Need a prime power, got p={p}, k={k}")
    kind = splitting_by_minimal_polynomial(fd, p)
    if p == 2:
        if k < 2:
            raise ValueError("The structure mod 2 is only covered for k >= 2")
        if kind != INERT:
            raise ValueError(f"2 is {kind} in Q(sqrt {fd.D}); only the inert case is covered")
        factors = [6, 2 ** (k - 1), 2 ** (k - 2)]
    elif kind == SPLIT:
        factors = [p - 1, p - 1, p ** (k - 1), p ** (k - 1)]
    elif kind == INERT:
        factors = [p * p - 1, p ** (k - 1), p ** (k - 1)]
    elif p == 3:
        if k >= 2 and fd.D % 9 == 3:
            raise ValueError(f"Ramified 3 with D={fd.D} = 3 mod 9 is not covered")
        factors = [6, 3 ** (k - 1), 3 ** (k - 1)]
    else:
        raise ValueError(f"{p} ramifies in Q(sqrt {fd.D}); only p = 3 is covered")
    return [f for f in factors if f > 1]


def elementary_divisors(orders: List[int]) -> List[int]:
    """Prime-power decomposition of a product of cyclic groups, sorted."""
    parts = []
    for n in orders:
        for q, e in factorint(n).items():
            parts.append(q ** e)
    return sorted(parts)


def _invertible_residues(fd: FieldData, n: int) -> List[QuadIntResidue]:
    return [x for x in (QuadIntResidue(a, b, n, fd) for a in range(n) for b in range(n)) if x.is_invertible()]


def brute_force_unit_group(fd: FieldData, p: int, k: int) -> List[int]:
    """Elementary divisors of ``(O_K / (p^k))^x`` by explicit enumeration.

    For each prime ``q`` of the group order, the counts ``n_j`` of elements killed by
    ``q^j`` determine how many cyclic factors have order at least ``q^j``.
    """
    n = p ** k
    elements = _invertible_residues(fd, n)
    order = len(elements)
    result = []
    for q, e_max in factorint(order).items():
        counts = [1] + [sum(1 for x in elements if (x ** (q ** j)).is_one())
                        for j in range(1, e_max + 1)]
        # number of cyclic factors of order >= q^j is log_q(n_j / n_{j-1})
        at_least = [_exact_log(counts[j] // counts[j - 1], q) for j in range(1, e_max + 1)] + [0]
        for j in range(e_max):
            result.extend([q ** (j + 1)] * (at_least[j] - at_least[j + 1]))
    return sorted(result)


def _exact_log(n: int, q: int) -> int:
    e = 0
    while n > 1:
        if n % q:
            raise ValueError(f"{n} is not a power of {q}")
        n //= q
        e += 1
    return e


def unit_group_order(fd: FieldData, n: int) -> int:
    """``|(O_K / (n))^x|`` from the splitting of each prime power exactly dividing ``n``."""
    total = 1
    for p, k in factorint(n).items():
        kind = splitting_by_minimal_polynomial(fd, p)
        if kind == SPLIT:
            base = (p - 1) ** 2
        elif kind == INERT:
            base = p * p - 1
        else:
            base = p * (p - 1)
        total *= base * p ** (2 * (k - 1))
    return total


def residue_order(x: QuadIntResidue) -> int:
    """Multiplicative order of ``x`` in ``(O_K / (n))^x``.

    Raises:
        ValueError: If ``x`` is not invertible.
    """
    if not x.is_invertible():
        raise ValueError(f"{x.key()} is not invertible mod {x.modulus}")
    bound = unit_group_order(x.field, x.modulus)
    power = x
    for k in range(1, bound + 1):
        if power.is_one():
            return k
        power = power * x
    raise ValueError(f"Order of {x.key()} mod {x.modulus} exceeds the group order {bound}")


def dimension_tower_check(d: int) -> bool:
    """``D`` is unchanged between ``d`` and ``d (d - 2)``."""
    return field_data(d).D == field_data(d * (d - 2)).D


def nine_d_constraint_check(d: int) -> bool:
    """For ``9 | d``, ``D`` is never 3 mod 9.

    Raises:
        ValueError: If 9 does not divide ``d``.
    """
    if d % 9:
        raise ValueError(f"Constraint applies to multiples of 9, got d={d}")
    return field_data(d).D % 9 != 3


def field_info(d: int) -> Dict[str, object]:
    """The ``fieldinfo`` report for dimension ``d``."""
    fd = field_data(d)
    dbar = dbar_of(d)
    units = norm_one_unit_and_r(fd, d)
    return {
        'd': d,
        'dbar': dbar,
        'D': fd.D,
        'omega_kind': fd.omega_kind,
        'u_f': units.u_f.as_pair(),
        'norm_uf': units.u_f.norm(),
        'u_D': units.u_D.as_pair(),
        'r': units.r,
        'order_uD_mod_dbar': units.order_mod_dbar,
        'splitting': {str(p): prime_splitting(fd, p) for p in sorted(factorint(dbar))},
        'ideal_divisor_count': ideal_divisor_count(fd, d),
    }


def level_divisors(n: int) -> List[int]:
    """Rational levels ``m | n`` with ``m > 1``."""
    return [m for m in divisors(n) if m > 1]

"""Rational arithmetic helpers: quadratic symbols, square classes of Q_p,
local norm groups, and imaginary quadratic orders with their class numbers.

The infinite place is represented by the module constant INF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

INF = math.inf

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization; inputs in this project stay small."""
    if n == 0:
        raise ValueError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def squarefree_part(n: int) -> int:
    """The squarefree integer m with n = m * (square), preserving sign."""
    if n == 0:
        raise ValueError("0 has no squarefree part")
    m = 1 if n > 0 else -1
    for p, e in factorize(n).items():
        if e % 2:
            m *= p
    return m


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    f = 49
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero int or Fraction."""
    fx = Fraction(x)
    if fx == 0:
        raise ValueError("valuation of 0")
    v = 0
    num, den = fx.numerator, fx.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def unit_part(x, p: int) -> Fraction:
    """x / p^v(x), a p-adic unit."""
    return Fraction(x) / Fraction(p) ** valuation(x, p)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for odd prime p."""
    a %= p
    if a == 0:
        return 0
    t = pow(a, (p - 1) // 2, p)
    return -1 if t == p - 1 else t


def _unit_mod(x, p: int, k: int) -> int:
    """Residue of the p-adic unit x mod p^k (x a Fraction prime to p)."""
    fx = Fraction(x)
    q = p ** k
    return fx.numerator * pow(fx.denominator, -1, q) % q


@lru_cache(maxsize=None)
def least_nonresidue(p: int) -> int:
    for u in range(2, p):
        if legendre(u, p) == -1:
            return u
    raise ValueError(f"{p} is not an odd prime")


def kronecker_symbol(a: int, p) -> int:
    """Splitting symbol of K = Q(sqrt(a)) at the prime p (or INF).

    1 = split, 0 = ramified, -1 = inert.  Squares count as split.  At INF the
    symbol is -1 exactly when a < 0.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    m = squarefree_part(a)
    if p is INF:
        return -1 if m < 0 else 1
    if m == 1:
        return 1
    if p == 2:
        if m % 2 == 0 or m % 4 == 3:  # disc = 4m, even
            return 0
        return 1 if m % 8 == 1 else -1
    if m % p == 0:
        return 0
    return legendre(m % p, p)


def hilbert_symbol(a, b, p) -> int:
    """Hilbert symbol (a, b)_p over Q_p (p = INF for the real place).

    Closed-form parity rules; the brute-force solvability oracle lives in the
    test suite.
    """
    fa, fb = Fraction(a), Fraction(b)
    if fa == 0 or fb == 0:
        raise ValueError("arguments must be nonzero")
    if p is INF:
        return -1 if fa < 0 and fb < 0 else 1
    alpha, beta = valuation(fa, p), valuation(fb, p)
    u, v = unit_part(fa, p), unit_part(fb, p)
    if p == 2:
        eps_u = (_unit_mod(u, 2, 2) - 1) // 2 % 2
        eps_v = (_unit_mod(v, 2, 2) - 1) // 2 % 2
        om_u = 1 if _unit_mod(u, 2, 3) in (3, 5) else 0
        om_v = 1 if _unit_mod(v, 2, 3) in (3, 5) else 0
        e = eps_u * eps_v + alpha * om_v + beta * om_u
        return -1 if e % 2 else 1
    lu = legendre(_unit_mod(u, p, 1), p)
    lv = legendre(_unit_mod(v, p, 1), p)
    e = alpha * beta * ((p - 1) // 2)
    s = (-1) ** e * lu ** beta * lv ** alpha
    return 1 if s == 1 else -1


# ---------------------------------------------------------------------------
# square classes of Q_p^x / (Q_p^x)^2


@dataclass(frozen=True)
class SquareClass:
    """A square class of Q_p^x, by its canonical representative.

    Odd p: reps {1, u, p, u*p} with u the least nonresidue.  p = 2: reps
    {1,3,5,7} x {1,2}.  INF: reps +-1.
    """

    p: object
    rep: int

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        if self.p != other.p:
            raise ValueError("mismatched places")
        return square_class(Fraction(self.rep) * other.rep, self.p)

    def __repr__(self) -> str:
        return f"sq({self.rep}@{self.p})"


def square_class(x, p) -> SquareClass:
    """Canonical square class of the nonzero rational x at p (or INF)."""
    fx = Fraction(x)
    if fx == 0:
        raise ValueError("0 has no square class")
    if p is INF:
        return SquareClass(INF, 1 if fx > 0 else -1)
    v = valuation(fx, p) % 2
    if p == 2:
        u = _unit_mod(unit_part(fx, 2), 2, 3)
        return SquareClass(2, u * (2 if v else 1))
    u = _unit_mod(unit_part(fx, p), p, 1)
    ur = 1 if legendre(u, p) == 1 else least_nonresidue(p)
    return SquareClass(p, ur * (p if v else 1))


def all_square_classes(p) -> list[SquareClass]:
    if p is INF:
        return [SquareClass(INF, 1), SquareClass(INF, -1)]
    if p == 2:
        return [SquareClass(2, r * s) for s in (1, 2) for r in (1, 3, 5, 7)]
    u = least_nonresidue(p)
    return [SquareClass(p, r) for r in (1, u, p, u * p)]


def unit_square_classes(p) -> list[SquareClass]:
    """Classes of p-adic units (valuation-0 part of the square class group)."""
    if p is INF:
        return [SquareClass(INF, 1), SquareClass(INF, -1)]
    if p == 2:
        return [SquareClass(2, r) for r in (1, 3, 5, 7)]
    return [SquareClass(p, 1), SquareClass(p, least_nonresidue(p))]


class SquareClassSubgroup:
    """A subgroup of the square class group at p, closed by construction."""

    def __init__(self, p, members):
        self.p = p
        gens = set(members)
        gens.add(square_class(1, p))
        # close under multiplication (the group is tiny)
        changed = True
        group = set(gens)
        while changed:
            changed = False
            for x in list(group):
                for y in list(group):
                    z = x * y
                    if z not in group:
                        group.add(z)
                        changed = True
        self.members = frozenset(group)
        if len(self.members) not in (1, 2, 4, 8):
            raise ValueError("impossible subgroup size")

    def __contains__(self, cls: SquareClass) -> bool:
        return cls in self.members

    def contains_value(self, x) -> bool:
        return square_class(x, self.p) in self.members

    def join(self, other: "SquareClassSubgroup") -> "SquareClassSubgroup":
        if self.p != other.p:
            raise ValueError("mismatched places")
        return SquareClassSubgroup(self.p, self.members | other.members)

    def issubset(self, other: "SquareClassSubgroup") -> bool:
        return self.members <= other.members

    def __eq__(self, other) -> bool:
        return isinstance(other, SquareClassSubgroup) and self.p == other.p and self.members == other.members

    def __hash__(self):
        return hash((self.p, self.members))

    def __len__(self):
        return len(self.members)

    def __repr__(self):
        reps = sorted(c.rep for c in self.members)
        return f"SquareClassSubgroup({self.p}, {reps})"

    def index_in_full(self) -> int:
        return len(all_square_classes(self.p)) // len(self.members)


def full_square_class_group(p) -> SquareClassSubgroup:
    return SquareClassSubgroup(p, all_square_classes(p))


def local_norm_group(m: int, p: int) -> SquareClassSubgroup:
    """Nm(K_p^x) mod squares for K = Q(sqrt(m)), as a square class subgroup.

    A class c is a local norm iff (m, c)_p = 1; the group is everything
    exactly when p splits in K.
    """
    if m == squarefree_part(m) and m not in (0, 1):
        pass
    else:
        raise ValueError("m must be squarefree and != 0, 1")
    members = [c for c in all_square_classes(p) if hilbert_symbol(m, c.rep, p) == 1]
    return SquareClassSubgroup(p, members)


# ---------------------------------------------------------------------------
# quadratic orders


@dataclass(frozen=True)
class QuadOrder:
    """Order of conductor f in K = Q(sqrt(m)), with generator w, Z[w] = B.

    w = f*(1+sqrt(m))/2 if m = 1 mod 4, else f*sqrt(m); (t, n) are its trace
    and norm, so disc(B) = t^2 - 4n = f^2 * disc(K).
    """

    m: int
    f: int

    def __post_init__(self):
        if self.m in (0, 1) or self.m != squarefree_part(self.m):
            raise ValueError("m must be squarefree, not 0 or 1")
        if self.f <= 0:
            raise ValueError("conductor must be positive")

    @property
    def t(self) -> int:
        return self.f if self.m % 4 == 1 else 0

    @property
    def n(self) -> int:
        if self.m % 4 == 1:
            return self.f * self.f * (1 - self.m) // 4
        return -self.f * self.f * self.m

    @property
    def field_disc(self) -> int:
        return self.m if self.m % 4 == 1 else 4 * self.m

    @property
    def disc(self) -> int:
        return self.f * self.f * self.field_disc

    def i_p(self, p: int) -> int:
        """Valuation of the conductor at p."""
        return valuation(self.f, p) if self.f % p == 0 else 0

    def kronecker(self, p) -> int:
        """Splitting symbol of the field K (not the order) at p."""
        return kronecker_symbol(self.m, p)

    def __repr__(self):
        return f"QuadOrder(m={self.m}, f={self.f})"


def reduced_forms(disc: int) -> list[tuple[int, int, int]]:
    """All primitive reduced positive binary quadratic forms of negative disc."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError("need a negative discriminant = 0,1 mod 4")
    forms = []
    a_max = isqrt(-disc // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            c4 = b * b - disc
            if c4 % (4 * a):
                continue
            c = c4 // (4 * a)
            if c < a:
                continue
            if a == c and b < 0:
                continue
            if gcd(gcd(a, abs(b)), c) != 1:
                continue
            forms.append((a, b, c))
    return forms


def quad_class_number(order: QuadOrder) -> int:
    """h(B) for an imaginary quadratic order, by counting reduced forms."""
    if order.m > 0:
        raise ValueError("unsupported base order: real quadratic class numbers are out of scope")
    return len(reduced_forms(order.disc))

"""Quaternion algebras (a,b | Q), elements, lattices in HNF, orders, ideals.

Lattices are stored as an integral 4x4 row-HNF matrix over the standard basis
1, i, j, k together with a single positive denominator, so equality of
lattices is equality of representations.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import gcd

from .errors import NoUnityError, NotARingError
from .linalg import det_fraction, hnf, integer_kernel
from .numthy import INF, factorize, hilbert_symbol, squarefree_part, valuation
from .residue import ResidueRing, matrix_coordinate_rows, radical_mod_p, split_matrix_units


class RatQuatAlgebra:
    """The quaternion algebra (a, b | Q) with its ramification set."""

    def __init__(self, a, b):
        a, b = Fraction(a), Fraction(b)
        if a == 0 or b == 0:
            raise ValueError("algebra parameters must be nonzero")
        self.a = a
        self.b = b
        self.ram = self._ramification()

    def _ramification(self) -> frozenset:
        cand = {2, INF}
        for x in (self.a, self.b):
            cand.update(factorize(x.numerator))
            cand.update(factorize(x.denominator))
        return frozenset(p for p in cand if hilbert_symbol(self.a, self.b, p) == -1)

    @property
    def is_definite(self) -> bool:
        return INF in self.ram

    @property
    def discriminant(self) -> int:
        d = 1
        for p in self.ram:
            if p is not INF:
                d *= p
        return d

    def element(self, coords) -> "QuatElement":
        return QuatElement(self, tuple(Fraction(c) for c in coords))

    def one(self):
        return self.element((1, 0, 0, 0))

    def basis(self):
        return [self.element(tuple(1 if i == c else 0 for i in range(4))) for c in range(4)]

    def __eq__(self, other):
        return isinstance(other, RatQuatAlgebra) and (self.a, self.b) == (other.a, other.b)

    def __hash__(self):
        return hash((self.a, self.b))

    def __repr__(self):
        return f"({self.a}, {self.b} | Q)"


def make_algebra(a, b) -> RatQuatAlgebra:
    alg = RatQuatAlgebra(a, b)
    assert len(alg.ram) % 2 == 0
    return alg


class QuatElement:
    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: RatQuatAlgebra, coords):
        self.algebra = algebra
        self.coords = tuple(Fraction(c) for c in coords)

    def __add__(self, other):
        return QuatElement(self.algebra, tuple(x + y for x, y in zip(self.coords, other.coords)))

    def __sub__(self, other):
        return QuatElement(self.algebra, tuple(x - y for x, y in zip(self.coords, other.coords)))

    def __neg__(self):
        return QuatElement(self.algebra, tuple(-x for x in self.coords))

    def __mul__(self, other):
        if isinstance(other, QuatElement):
            a, b = self.algebra.a, self.algebra.b
            x0, x1, x2, x3 = self.coords
            y0, y1, y2, y3 = other.coords
            return QuatElement(
                self.algebra,
                (
                    x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
                    x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
                    x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
                    x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
                ),
            )
        return QuatElement(self.algebra, tuple(Fraction(other) * c for c in self.coords))

    __rmul__ = __mul__

    def conj(self) -> "QuatElement":
        x0, x1, x2, x3 = self.coords
        return QuatElement(self.algebra, (x0, -x1, -x2, -x3))

    def trd(self) -> Fraction:
        return 2 * self.coords[0]

    def nrd(self) -> Fraction:
        a, b = self.algebra.a, self.algebra.b
        x0, x1, x2, x3 = self.coords
        return x0 * x0 - a * x1 * x1 - b * x2 * x2 + a * b * x3 * x3

    def inverse(self) -> "QuatElement":
        n = self.nrd()
        if n == 0:
            raise ZeroDivisionError("zero divisor")
        return self.conj() * (Fraction(1) / n)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __eq__(self, other):
        return isinstance(other, QuatElement) and self.algebra == other.algebra and self.coords == other.coords

    def __hash__(self):
        return hash((self.algebra.a, self.algebra.b, self.coords))

    def __repr__(self):
        return f"<{' , '.join(str(c) for c in self.coords)}>"


class QuatLattice:
    """Full-rank Z-lattice, canonical (denominator, integral row HNF) pair."""

    __slots__ = ("algebra", "den", "mat")

    def __init__(self, algebra: RatQuatAlgebra, den: int, mat):
        self.algebra = algebra
        self.den = den
        self.mat = tuple(tuple(r) for r in mat)

    @staticmethod
    def from_rows(algebra: RatQuatAlgebra, rows) -> "QuatLattice":
        """Rows of Fractions spanning the lattice (any number >= 4)."""
        den = 1
        for r in rows:
            for v in r:
                den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
        int_rows = [[int(Fraction(v) * den) for v in r] for r in rows]
        h = hnf(int_rows)
        if len(h) != 4:
            raise ValueError("lattice is not of full rank")
        g = den
        for r in h:
            for v in r:
                g = gcd(g, v)
        return QuatLattice(algebra, den // g, [[v // g for v in r] for r in h])

    @staticmethod
    def from_elements(algebra: RatQuatAlgebra, elems) -> "QuatLattice":
        return QuatLattice.from_rows(algebra, [e.coords for e in elems])

    def basis_elements(self) -> list:
        d = Fraction(1, self.den)
        return [self.algebra.element(tuple(v * d for v in row)) for row in self.mat]

    def coordinates_of(self, elem: QuatElement):
        """Solve c * basis = elem over Q; returns 4 Fractions."""
        target = [Fraction(v) * self.den for v in elem.coords]
        c = [Fraction(0)] * 4
        for col in range(4):
            acc = target[col]
            for r in range(col):
                acc -= c[r] * self.mat[r][col]
            c[col] = acc / self.mat[col][col]
        # verify the trailing columns too
        for col in range(4):
            assert sum(c[r] * self.mat[r][col] for r in range(4)) == target[col]
        return c

    def contains(self, elem: QuatElement) -> bool:
        try:
            return all(c.denominator == 1 for c in self.coordinates_of(elem))
        except AssertionError:
            return False

    def __eq__(self, other):
        return (
            isinstance(other, QuatLattice)
            and self.algebra == other.algebra
            and self.den == other.den
            and self.mat == other.mat
        )

    def __hash__(self):
        return hash((self.algebra.a, self.algebra.b, self.den, self.mat))

    def __repr__(self):
        return f"QuatLattice(den={self.den}, mat={self.mat})"

    def scale(self, c) -> "QuatLattice":
        c = Fraction(c)
        return QuatLattice.from_rows(self.algebra, [[v * c / self.den for v in row] for row in self.mat])

    def multiply_element(self, x: QuatElement, side: str) -> "QuatLattice":
        elems = self.basis_elements()
        prods = [e * x for e in elems] if side == "right" else [x * e for e in elems]
        return QuatLattice.from_elements(self.algebra, prods)

    def sum_with(self, other: "QuatLattice") -> "QuatLattice":
        rows = [[Fraction(v, self.den) for v in r] for r in self.mat]
        rows += [[Fraction(v, other.den) for v in r] for r in other.mat]
        return QuatLattice.from_rows(self.algebra, rows)

    def intersect(self, other: "QuatLattice") -> "QuatLattice":
        d = self.den * other.den // gcd(self.den, other.den)
        m1 = [[v * (d // self.den) for v in r] for r in self.mat]
        m2 = [[v * (d // other.den) for v in r] for r in other.mat]
        # x = c1*M1 = c2*M2: left kernel of the stacked [M1; -M2]
        ker = integer_kernel(m1 + [[-v for v in r] for r in m2])
        rows = []
        for kv in ker:
            rows.append([Fraction(sum(kv[r] * m1[r][c] for r in range(4)), d) for c in range(4)])
        return QuatLattice.from_rows(self.algebra, rows)

    def index_in(self, other: "QuatLattice") -> Fraction:
        """[other : self] as a positive rational (lattice index)."""
        det_self = Fraction(_det4(self.mat), self.den ** 4)
        det_other = Fraction(_det4(other.mat), other.den ** 4)
        return abs(det_self / det_other)

    def conjugate(self) -> "QuatLattice":
        return QuatLattice.from_elements(self.algebra, [e.conj() for e in self.basis_elements()])


def _det4(mat) -> int:
    # upper triangular HNF: product of the diagonal
    d = 1
    for i in range(4):
        d *= mat[i][i]
    return d


def lattice_product(l1: QuatLattice, l2: QuatLattice) -> QuatLattice:
    if l1.algebra != l2.algebra:
        raise ValueError("incompatible algebras")
    b1 = l1.basis_elements()
    b2 = l2.basis_elements()
    return QuatLattice.from_elements(l1.algebra, [x * y for x in b1 for y in b2])


def conjugate_lattice(lat: QuatLattice) -> QuatLattice:
    return lat.conjugate()


class QuatOrder:
    """A lattice that is a unital ring, with its reduced discriminant cached."""

    __slots__ = ("lattice", "disc", "_residue_cache")

    def __init__(self, lattice: QuatLattice, disc: int):
        self.lattice = lattice
        self.disc = disc
        self._residue_cache = {}

    @property
    def algebra(self) -> RatQuatAlgebra:
        return self.lattice.algebra

    def basis_elements(self):
        return self.lattice.basis_elements()

    def __eq__(self, other):
        return isinstance(other, QuatOrder) and self.lattice == other.lattice

    def __hash__(self):
        return hash(self.lattice)

    def __repr__(self):
        return f"QuatOrder(disc={self.disc}, den={self.lattice.den})"

    def residue_ring(self, p: int, k: int) -> ResidueRing:
        key = (p, k)
        if key not in self._residue_cache:
            basis = self.basis_elements()
            table = []
            for ei in basis:
                row = []
                for ej in basis:
                    coords = self.lattice.coordinates_of(ei * ej)
                    assert all(c.denominator == 1 for c in coords)
                    row.append([int(c) for c in coords])
                table.append(row)
            one = [int(c) for c in self.lattice.coordinates_of(self.algebra.one())]
            trdv = [int(e.trd()) for e in basis]
            nrd_diag = [int(e.nrd()) for e in basis]
            polar = [
                [int((basis[i] * basis[j].conj()).trd()) for j in range(4)] for i in range(4)
            ]
            self._residue_cache[key] = ResidueRing(p, k, table, one, trdv, nrd_diag, polar)
        return self._residue_cache[key]

    def element_from_residue(self, x) -> QuatElement:
        basis = self.basis_elements()
        acc = self.algebra.element((0, 0, 0, 0))
        for c, e in zip(x, basis):
            acc = acc + int(c) * e
        return acc


def gram_matrix(lat: QuatLattice):
    basis = lat.basis_elements()
    return [[(basis[i] * basis[j].conj()).trd() for j in range(4)] for i in range(4)]


def reduced_discriminant(lat: QuatLattice) -> int:
    det = det_fraction(gram_matrix(lat))
    det = abs(det)
    assert det.denominator == 1, "lattice is not integral enough to be an order"
    d = math.isqrt(int(det))
    assert d * d == int(det), "Gram determinant is not a perfect square"
    return d


def order_closure_check(lat: QuatLattice) -> QuatOrder:
    """Validate 1 in L and multiplicative closure; return the order."""
    if not lat.contains(lat.algebra.one()):
        raise NoUnityError("1 is not in the lattice")
    basis = lat.basis_elements()
    for i, x in enumerate(basis):
        for j, y in enumerate(basis):
            if not lat.contains(x * y):
                raise NotARingError((i, j))
    return QuatOrder(lat, reduced_discriminant(lat))


def standard_order(alg: RatQuatAlgebra) -> QuatOrder:
    """Z<1, i', j', i'j'> with i', j' scaled to have squarefree integer squares."""
    sa = _integralize(alg.a)
    sb = _integralize(alg.b)
    i_el = alg.element((0, sa, 0, 0))
    j_el = alg.element((0, 0, sb, 0))
    k_el = i_el * j_el
    lat = QuatLattice.from_elements(alg, [alg.one(), i_el, j_el, k_el])
    return order_closure_check(lat)


def _integralize(x: Fraction) -> Fraction:
    """c > 0 with (c^2 x) a squarefree integer."""
    n = squarefree_part(x.numerator * x.denominator)
    c = Fraction(1)
    target = Fraction(n)
    c2 = target / x
    # c2 is a square of a rational by construction
    num_r = math.isqrt(c2.numerator)
    den_r = math.isqrt(c2.denominator)
    assert num_r * num_r == c2.numerator and den_r * den_r == c2.denominator
    return Fraction(num_r, den_r)


# ---------------------------------------------------------------------------
# maximal orders and Eichler orders


def _radical_lattice(order: QuatOrder, p: int) -> QuatLattice:
    ring = order.residue_ring(p, 1)
    rad = radical_mod_p(ring)
    basis = order.basis_elements()
    rows = [[Fraction(v) * p / order.lattice.den for v in row] for row in order.lattice.mat]
    for vec in rad:
        el = order.element_from_residue(vec)
        rows.append(list(el.coords))
    return QuatLattice.from_rows(order.algebra, rows)


def left_order(lat: QuatLattice) -> QuatOrder:
    return _side_order(lat, "left")


def right_order(lat: QuatLattice) -> QuatOrder:
    return _side_order(lat, "right")


def _side_order(lat: QuatLattice, side: str) -> QuatOrder:
    """O_l(I) = {x : xI <= I} (resp. right), by exact stability solving."""
    basis = lat.basis_elements()
    t = None
    for cand in basis:
        if cand.nrd() != 0:
            t = cand
            break
    if t is None:
        for x in basis:
            for y in basis:
                if (x + y).nrd() != 0:
                    t = x + y
                    break
            if t is not None:
                break
    assert t is not None, "rank-4 lattice must contain an invertible element"
    tinv = t.inverse()
    container = lat.multiply_element(tinv, "right" if side == "left" else "left")
    cbasis = container.basis_elements()
    # condition: for each beta in cbasis and each b in basis: beta*b in lat
    cols = []
    den = 1
    w = []
    for beta in cbasis:
        row = []
        for b in basis:
            prod = beta * b if side == "left" else b * beta
            coords = lat.coordinates_of(prod)
            row.extend(coords)
        w.append(row)
        for v in row:
            den = den * v.denominator // gcd(den, v.denominator)
    wa = [[int(v * den) for v in row] for row in w]
    if den == 1:
        sol_rows = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    else:
        sol_rows = _kernel_mod(wa, den)
    rows = []
    for c in sol_rows:
        el = sum((int(ci) * e for ci, e in zip(c, cbasis)), start=lat.algebra.element((0, 0, 0, 0)))
        rows.append(el.coords)
    out = QuatLattice.from_rows(lat.algebra, rows)
    return order_closure_check(out)


def _kernel_mod(rows, modulus: int):
    """Generators of {c : c*A = 0 mod modulus} including modulus*Z^m."""
    m = len(rows)
    n = len(rows[0])
    stacked = [list(r) for r in rows] + [[modulus if j == i else 0 for j in range(n)] for i in range(n)]
    ker = integer_kernel(stacked)
    sols = [v[:m] for v in ker]
    for i in range(m):
        sols.append([modulus if j == i else 0 for j in range(m)])
    return hnf(sols)


def _two_sided_idealizer(order: QuatOrder, jlat: QuatLattice) -> QuatOrder:
    ol = left_order(jlat)
    orr = right_order(jlat)
    inter = ol.lattice.intersect(orr.lattice)
    return order_closure_check(inter)


_MAXORDER_CACHE: dict = {}


def maximal_order(alg: RatQuatAlgebra, start: QuatOrder | None = None) -> QuatOrder:
    """A maximal order (containing `start` if given), by the radical
    idealizer process plus idempotent climbing at hereditary split primes."""
    key = (alg, start.lattice if start is not None else None)
    if key in _MAXORDER_CACHE:
        return _MAXORDER_CACHE[key]
    order = start if start is not None else standard_order(alg)
    d_target = alg.discriminant
    bad = sorted(set(factorize(order.disc)) | set(factorize(d_target)))
    for p in bad:
        target_v = valuation(d_target, p) if d_target % p == 0 else 0
        guard = 0
        while (valuation(order.disc, p) if order.disc % p == 0 else 0) > target_v:
            guard += 1
            if guard > 64:
                raise RuntimeError("maximal order process did not terminate")
            jlat = _radical_lattice(order, p)
            bigger = _two_sided_idealizer(order, jlat)
            if bigger.lattice != order.lattice:
                order = bigger
                continue
            # hereditary split case: Eichler of level p; pass to a maximal overorder
            order = _maximal_over_hereditary(order, p)
    assert order.disc == d_target, (order.disc, d_target)
    _MAXORDER_CACHE[key] = order
    return order


def _maximal_over_hereditary(order: QuatOrder, p: int) -> QuatOrder:
    """O hereditary at split p with v_p(disc) = 1: lift an idempotent and climb."""
    for prec in (2, 3, 4, 6):
        ring = order.residue_ring(p, prec)
        e_idem = _lift_radical_idempotent(order, ring)
        if e_idem is None:
            continue
        e_el = order.element_from_residue(e_idem)
        one = order.algebra.one()
        for left, right in ((e_el, one - e_el), (one - e_el, e_el)):
            rows = [[Fraction(v, order.lattice.den) for v in r] for r in order.lattice.mat]
            for b in order.basis_elements():
                rows.append(((left * b * right) * Fraction(1, p)).coords)
            cand = QuatLattice.from_rows(order.algebra, rows)
            try:
                o2 = order_closure_check(cand)
            except (NotARingError, AssertionError):
                continue
            if valuation(order.disc, p) > (valuation(o2.disc, p) if o2.disc % p == 0 else 0):
                return o2
    raise RuntimeError(f"could not enlarge hereditary order at {p}")


def _lift_radical_idempotent(order: QuatOrder, ring: ResidueRing):
    """Nontrivial idempotent of O/p^k lifting one of (O/p)/J = F_p x F_p."""
    p = ring.p
    rad = radical_mod_p(order.residue_ring(p, 1))
    # search an element whose char poly has distinct roots mod p (split quotient)
    import random as _random

    rng = _random.Random(1)
    for _ in range(600):
        x = tuple(rng.randrange(ring.q) for _ in range(4))
        t, n = ring.trd(x), ring.nrd(x)
        if p == 2:
            if t % 2 == 0 or n % 2:
                continue
            r0 = 0
        else:
            disc = (t * t - 4 * n) % p
            from .residue import sqrt_mod_p

            s = sqrt_mod_p(disc, p)
            if s is None or s == 0:
                continue
            r0 = (t + s) * pow(2, -1, p) % p
        from .residue import _newton_root

        r1 = _newton_root(ring, t, n, r0)
        r2 = (t - r1) % ring.q
        if (r1 - r2) % p == 0:
            continue
        u = pow(r1 - r2, -1, ring.q)
        e = ring.smul(u, ring.sub(x, ring.scalar(r2)))
        return e
    return None


def eichler_order(alg: RatQuatAlgebra, level: int, disc: int | None = None) -> QuatOrder:
    """Order maximal at p | disc(D), upper-triangular of level p^e at p^e || N."""
    d = alg.discriminant
    if disc is not None and disc != d:
        raise ValueError(f"algebra has discriminant {d}, not {disc}")
    if level <= 0:
        raise ValueError("level must be positive")
    if gcd(level, d) != 1:
        raise ValueError("level must be coprime to the discriminant")
    order = maximal_order(alg)
    for p, e in sorted(factorize(level).items()):
        order = _eichler_step(order, p, e)
    got = order.disc
    assert got == d * level, (got, d, level)
    return order


def _eichler_step(order: QuatOrder, p: int, e: int) -> QuatOrder:
    ring = order.residue_ring(p, e + 1)
    units = split_matrix_units(ring, seed=0)
    coord_rows = matrix_coordinate_rows(ring, units)
    a21_row = coord_rows[2]
    pe = p ** e
    # sublattice {x in O : a21(x) = 0 mod p^e}
    sols = _kernel_mod([[a21_row[c]] for c in range(4)], pe)
    basis = order.basis_elements()
    rows = []
    for c in sols:
        el = sum((int(ci) * b for ci, b in zip(c, basis)), start=order.algebra.element((0, 0, 0, 0)))
        rows.append(el.coords)
    lat = QuatLattice.from_rows(order.algebra, rows)
    return order_closure_check(lat)


class RightIdeal:
    """Locally principal right O-ideal (principality certified lazily)."""

    __slots__ = ("lattice", "order", "nrd")

    def __init__(self, lattice: QuatLattice, order: QuatOrder, validate: bool = True):
        self.lattice = lattice
        self.order = order
        if validate:
            for x in lattice.basis_elements():
                for b in order.basis_elements():
                    if not lattice.contains(x * b):
                        raise ValueError("lattice is not right-stable under the order")
        self.nrd = _ideal_norm(lattice)
        if validate:
            # index relation for locally principal ideals: [O : I] = Nr(I)^2
            idx = lattice.index_in(order.lattice)
            assert idx == self.nrd ** 2, (idx, self.nrd)

    @property
    def algebra(self):
        return self.order.algebra

    def __eq__(self, other):
        return isinstance(other, RightIdeal) and self.lattice == other.lattice and self.order == other.order

    def __hash__(self):
        return hash((self.lattice, self.order.lattice))

    def __repr__(self):
        return f"RightIdeal(nrd={self.nrd})"


def _ideal_norm(lat: QuatLattice) -> Fraction:
    """Positive generator of the fractional ideal generated by nrd on the lattice.

    The ideal of values of the norm form is generated by nrd on a basis
    together with the polarization values nrd(b_i + b_j).
    """
    basis = lat.basis_elements()
    vals = [b.nrd() for b in basis]
    for i in range(4):
        for j in range(i + 1, 4):
            vals.append((basis[i] + basis[j]).nrd())
    g = Fraction(0)
    for v in vals:
        g = _frac_gcd(g, abs(v))
    return g


def _frac_gcd(x: Fraction, y: Fraction) -> Fraction:
    if x == 0:
        return abs(y)
    if y == 0:
        return abs(x)
    den = x.denominator * y.denominator // gcd(x.denominator, y.denominator)
    return Fraction(gcd(int(x * den), int(y * den)), den)


def ideal_over(order: QuatOrder, lattice: QuatLattice) -> RightIdeal:
    return RightIdeal(lattice, order)


def principal_ideal(order: QuatOrder, x: QuatElement) -> RightIdeal:
    return RightIdeal(order.lattice.multiply_element(x, "left"), order)


_DEFINITE_CACHE: dict[int, RatQuatAlgebra] = {}


def definite_algebra_with_disc(d: int) -> RatQuatAlgebra:
    """The definite algebra over Q ramified exactly at the primes of d and INF."""
    if d in _DEFINITE_CACHE:
        return _DEFINITE_CACHE[d]
    fac = factorize(d)
    if any(e > 1 for e in fac.values()) or len(fac) % 2 == 0:
        raise ValueError("discriminant must be squarefree with an odd number of primes")
    target = frozenset(fac) | {INF}
    for aa in range(-1, -40, -1):
        for bb in range(-1, -40, -1):
            alg = RatQuatAlgebra(aa, bb)
            if alg.ram == target:
                _DEFINITE_CACHE[d] = alg
                return alg
    raise RuntimeError(f"no small definite algebra of discriminant {d} found")

"""Global enumeration in totally definite algebras over Q.

Short vectors by exact rational Fincke-Pohst, unit groups, right ideal class
sets with a mass-formula completeness certificate, spinor-class partitions,
global optimal embedding counts, and the trace / spinor trace formula
checks.  No floating point on any verification path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from .errors import IndefiniteAlgebraError, MassShortfallError
from .linalg import kernel_mod_prime_power
from .numthy import QuadOrder, factorize, quad_class_number
from .quat import (
    QuatElement,
    QuatLattice,
    QuatOrder,
    RightIdeal,
    lattice_product,
    left_order,
    maximal_order,
    order_closure_check,
)
from .localorder import local_embed_count, local_unit_index
from .residue import matrix_coordinate_rows, split_matrix_units
from . import spinor as spinor_mod


def _require_definite(alg):
    if not alg.is_definite:
        raise IndefiniteAlgebraError("operation needs a totally definite algebra")


# ---------------------------------------------------------------------------
# exact short vector enumeration


def _floor_sqrt(q: Fraction) -> int:
    """floor(sqrt(q)) for q >= 0."""
    if q < 0:
        raise ValueError("negative radicand")
    return isqrt(q.numerator * q.denominator) // q.denominator


def _floor_plus_sqrt(a: Fraction, q: Fraction) -> int:
    """floor(a + sqrt(q)) for q >= 0, exactly."""
    k = a.numerator // a.denominator + _floor_sqrt(q) + 2
    while k - a > 0 and (k - a) * (k - a) > q:
        k -= 1
    return k


def _int_range_abs(center: Fraction, radius2: Fraction):
    """Integers c with (c + center)^2 <= radius2."""
    if radius2 < 0:
        return range(0, 0)
    hi = _floor_plus_sqrt(-center, radius2)
    lo = -_floor_plus_sqrt(center, radius2)
    return range(lo, hi + 1)


def _ldl(gram):
    """G = L^T D L with unit lower-triangular L (rows), D diagonal; exact."""
    n = len(gram)
    a = [[Fraction(gram[i][j]) for j in range(n)] for i in range(n)]
    d = [Fraction(0)] * n
    l = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for i in range(n):
        d[i] = a[i][i] - sum(d[k] * l[k][i] * l[k][i] for k in range(i))
        assert d[i] > 0, "form is not positive definite"
        for j in range(i + 1, n):
            l[i][j] = (a[i][j] - sum(d[k] * l[k][i] * l[k][j] for k in range(i))) / d[i]
    return d, l


def quadratic_points(gram, shift, bound: Fraction, target: Fraction | None = None):
    """Integer vectors c with Q(c + shift) <= bound (or == target if given).

    Q is the positive definite form with matrix `gram` (so Q(x) = x G x^T),
    evaluated exactly.  Classic Fincke-Pohst recursion.
    """
    n = len(gram)
    d, l = _ldl(gram)
    out = []
    coords = [0] * n

    def q_of(c):
        acc = Fraction(0)
        y = [Fraction(c[i]) + shift[i] for i in range(n)]
        for i in range(n):
            for j in range(n):
                acc += y[i] * gram[i][j] * y[j]
        return acc

    def rec(i: int, remaining: Fraction):
        if i < 0:
            val = q_of(coords)
            if target is None or val == target:
                out.append(tuple(coords))
            return
        # Q = sum_i d_i (y_i + sum_{j>i} l_i_j y_j)^2 with y = c + shift
        center = shift[i] + sum(l[i][j] * (coords[j] + shift[j]) for j in range(i + 1, n))
        for c in _int_range_abs(center, remaining / d[i]):
            coords[i] = c
            used = d[i] * (c + center) * (c + center)
            rec(i - 1, remaining - used)
        coords[i] = 0

    rec(n - 1, Fraction(bound))
    return out


def short_vectors(lat: QuatLattice, bound) -> list:
    """All nonzero x in the lattice with nrd(x) <= bound, exactly."""
    _require_definite(lat.algebra)
    basis = lat.basis_elements()
    gram = [[Fraction((basis[i] * basis[j].conj()).trd(), 2) for j in range(4)] for i in range(4)]
    pts = quadratic_points(gram, [Fraction(0)] * 4, Fraction(bound))
    out = []
    for c in pts:
        if not any(c):
            continue
        el = basis[0] * c[0] + basis[1] * c[1] + basis[2] * c[2] + basis[3] * c[3]
        out.append(el)
    return out


_UNIT_CACHE: dict = {}


def unit_group(order: QuatOrder) -> list:
    """All units of a definite order: exactly the elements of reduced norm 1."""
    key = order.lattice
    if key not in _UNIT_CACHE:
        _require_definite(order.algebra)
        units = [x for x in short_vectors(order.lattice, 1) if x.nrd() == 1]
        _UNIT_CACHE[key] = units
    return _UNIT_CACHE[key]


def is_principal(ideal: RightIdeal):
    """A generator x with I = xO, or None.  Elements of I have nrd in Nr(I)Z,
    so it suffices to search nrd(x) = Nr(I) among short vectors."""
    _require_definite(ideal.algebra)
    target = ideal.nrd
    for x in short_vectors(ideal.lattice, target):
        if abs(x.nrd()) == target:
            return x
    return None


def ideals_isomorphic(i1: RightIdeal, i2: RightIdeal) -> bool:
    """Right O-ideal classes: [I1] = [I2] iff I1 * conj(I2) / Nr(I2) is principal."""
    m = lattice_product(i1.lattice, i2.lattice.conjugate()).scale(Fraction(1, 1) / i2.nrd)
    mi = RightIdeal(m, left_order(i2.lattice), validate=False)
    return is_principal(mi) is not None


# ---------------------------------------------------------------------------
# mass and the class set


def mass_of_genus(order: QuatOrder) -> Fraction:
    """mass(O) = mass(O_max) * prod_p [O_max,p^x : O_p^x], with the Eichler
    mass prod_{q | d} (q-1)/24 for a maximal order over Q."""
    _require_definite(order.algebra)
    omax = maximal_order(order.algebra, start=order)
    mass = Fraction(1, 24)
    for q in factorize(order.algebra.discriminant):
        mass *= q - 1
    idx = order.lattice.index_in(omax.lattice)
    for p in factorize(int(idx)):
        mass *= local_unit_index(order, omax, p)
    return mass


@dataclass
class ClassSet:
    order: QuatOrder
    reps: list  # RightIdeal
    left_orders: list
    unit_sizes: list
    spinor_labels: list
    mass_target: Fraction
    mass_achieved: Fraction
    neighbor_primes: list

    @property
    def h(self) -> int:
        return len(self.reps)

    def classes_with_label(self, label):
        return [i for i, lbl in enumerate(self.spinor_labels) if lbl == label]


def _neighbor_primes_for(order: QuatOrder, cap: int, group) -> list:
    """Split primes coprime to d(O), chosen so their SCl shifts generate SCl."""
    from .numthy import is_prime, square_class

    primes = []
    want = group.size
    reached = {group.identity()}
    for p in range(2, cap + 1):
        if not is_prime(p) or order.disc % p == 0:
            continue
        primes.append(p)
        shift = []
        for i, q in enumerate(group.primes):
            if q == p:
                # p coprime to d(O) means the quotient at p is trivial
                assert len(group.cosets[i]) == 1
                shift.append(group.cosets[i][0])
            else:
                shift.append(group.coset_of(q, square_class(p, q)))
        reached |= {group.combine(e, tuple(shift)) for e in reached}
        if len(reached) == want and len(primes) >= 2:
            break
    if len(reached) < want:
        raise MassShortfallError("neighbor primes cannot reach every spinor class")
    return primes


def _splitting_rows(order: QuatOrder, p: int, seed: int = 0):
    ring = order.residue_ring(p, 1)
    units = split_matrix_units(ring, seed=seed)
    return matrix_coordinate_rows(ring, units)


def p_neighbors(ideal: RightIdeal, p: int, rows) -> list:
    """The p+1 neighbors J <= I: preimages of the maximal right O/pO-submodules
    of I/pI, identified with M_2(F_p) through a local generator of I at p.

    Nr(J) = p Nr(I) and O_r(J) = O.
    """
    from .localorder import certify_locally_principal

    order = ideal.order
    if ideal.lattice == order.lattice:
        g = order.algebra.one()
    else:
        g = certify_locally_principal(ideal, p)
    ginv = g.inverse()
    basis_i = ideal.lattice.basis_elements()
    w = [order.lattice.coordinates_of(ginv * b) for b in basis_i]
    for wi in w:
        assert all(v.denominator % p for v in wi), "local generator failed p-integrality"
    wmod = [[(v.numerator * pow(v.denominator, -1, p)) % p for v in wi] for wi in w]
    out = []
    lines = [(1, 0)] + [(c, 1) for c in range(p)]
    for v in lines:
        cond = []
        for i in range(4):
            a = sum((v[0] * rows[0][c] + v[1] * rows[2][c]) * wmod[i][c] for c in range(4)) % p
            b = sum((v[0] * rows[1][c] + v[1] * rows[3][c]) * wmod[i][c] for c in range(4)) % p
            cond.append([a, b])
        sols = kernel_mod_prime_power(cond, p, 1)
        lat_rows = []
        for s in sols:
            el = sum((int(si) * bb for si, bb in zip(s, basis_i)), start=order.algebra.element((0, 0, 0, 0)))
            lat_rows.append(el.coords)
        j = QuatLattice.from_rows(order.algebra, lat_rows)
        out.append(RightIdeal(j, order, validate=False))
    return out


def class_set(order: QuatOrder, primes_cap: int = 50, exhaust: bool = False, seed: int = 0) -> ClassSet:
    """Right ideal classes by p-neighbor BFS, stopped by the exact mass."""
    _require_definite(order.algebra)
    group = spinor_mod.spinor_class_group(order)
    target = mass_of_genus(order)
    primes = _neighbor_primes_for(order, primes_cap, group)
    splits = {p: _splitting_rows(order, p, seed=seed) for p in primes}
    start = RightIdeal(order.lattice, order, validate=False)
    reps = [start]
    lefts = [order_closure_check(order.lattice)]
    units = [len(unit_group(lefts[0]))]
    labels = [spinor_mod.spinor_class_of_ideal(start, group)]
    achieved = Fraction(1, units[0])
    queue = [start]
    seen_keys = {start.lattice}
    while queue:
        if not exhaust and achieved == target:
            break
        if achieved > target:
            raise AssertionError("mass overshoot: enumeration found too many classes")
        ideal = queue.pop(0)
        for p in primes:
            for j in p_neighbors(ideal, p, splits[p]):
                if j.lattice in seen_keys:
                    continue
                seen_keys.add(j.lattice)
                if any(ideals_isomorphic(j, r) for r in reps):
                    continue
                reps.append(j)
                lo = left_order(j.lattice)
                lefts.append(lo)
                units.append(len(unit_group(lo)))
                labels.append(spinor_mod.spinor_class_of_ideal(j, group))
                achieved += Fraction(1, units[-1])
                queue.append(j)
        if not queue and achieved != target:
            raise MassShortfallError(
                f"mass {achieved} != target {target} with primes up to {primes_cap}"
            )
    if achieved != target:
        raise MassShortfallError(f"mass {achieved} != target {target}")
    return ClassSet(order, reps, lefts, units, labels, target, achieved, primes)


# ---------------------------------------------------------------------------
# global optimal embedding counts


def embedding_roots(quad: QuadOrder, order: QuatOrder) -> list:
    """All x in O with trd(x) = t, nrd(x) = n (exact slice enumeration)."""
    _require_definite(order.algebra)
    basis = order.basis_elements()
    trdv = [int(b.trd()) for b in basis]
    t, n = quad.t, quad.n
    g = 0
    for v in trdv:
        g = gcd(g, v)
    if g == 0:
        return [] if t != 0 else None  # degenerate; cannot happen for orders
    if t % g:
        return []
    part = _solve_linear_diophantine(trdv, t)
    if part is None:
        return []
    kernel = _integer_kernel_of_vector(trdv)
    x0 = sum((part[i] * basis[i] for i in range(4)), start=order.algebra.element((0, 0, 0, 0)))
    kbasis = [
        sum((kv[i] * basis[i] for i in range(4)), start=order.algebra.element((0, 0, 0, 0)))
        for kv in kernel
    ]
    gram = [[(kbasis[i] * kbasis[j].conj()).trd() / 2 for j in range(3)] for i in range(3)]
    # Q(c + shift) with shift solving x0 + sum c_i k_i: shift enters through x0
    # nrd(x0 + w) = nrd(x0) + trd(x0 conj(w)) + nrd(w); complete the square via
    # the affine offset: solve shift s with w = sum (c_i + s_i) k_i matching.
    lin = [Fraction((x0 * kbasis[i].conj()).trd()) for i in range(3)]
    # Solve 2 G s = lin for the affine center
    s = _solve_rational(gram, [l / 2 for l in lin])
    const = Fraction(x0.nrd()) - sum(s[i] * gram[i][j] * s[j] for i in range(3) for j in range(3))
    target = Fraction(n) - const
    if target < 0:
        return []
    pts = quadratic_points(gram, s, target, target=target)
    out = []
    for c in pts:
        el = x0
        for ci, kb in zip(c, kbasis):
            el = el + ci * kb
        if el.trd() == t and el.nrd() == n:
            out.append(el)
    return out


def _integer_kernel_of_vector(vec):
    from .linalg import integer_kernel

    return integer_kernel([[v] for v in vec])


def _solve_linear_diophantine(vec, t):
    from .linalg import hnf_with_transform

    h, u = hnf_with_transform([[v] for v in vec])
    g = h[0][0] if h and h[0] else 0
    if g == 0 or t % g:
        return None
    return [u[0][i] * (t // g) for i in range(4)]


def _solve_rational(gram, rhs):
    """Solve G s = rhs for symmetric positive definite rational G."""
    n = len(gram)
    a = [[Fraction(gram[i][j]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        inv = 1 / a[c][c]
        a[c] = [v * inv for v in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [a[r][j] - f * a[c][j] for j in range(n + 1)]
    return [a[i][n] for i in range(n)]


def _is_optimal_global(quad: QuadOrder, order: QuatOrder, x: QuatElement) -> bool:
    """(Q + Qx) cap O = Z + Zx, by elementary divisors of the coordinate rows.

    [Q(x) cap O : Z + Zx] is the product of the elementary divisors of the
    2x4 integer matrix of coordinates of (1, x) in the order basis, which is
    the gcd of its 2x2 minors.
    """
    one_c = [int(v) for v in order.lattice.coordinates_of(order.algebra.one())]
    x_c = [int(v) for v in order.lattice.coordinates_of(x)]
    g = 0
    for i in range(4):
        for j in range(i + 1, 4):
            g = gcd(g, one_c[i] * x_c[j] - one_c[j] * x_c[i])
    return abs(g) == 1


def global_embed_count(quad: QuadOrder, order: QuatOrder) -> int:
    """m(B, O, O^x): optimal embeddings up to unit conjugation, exactly."""
    if quad.m > 0:
        raise ValueError("global enumeration needs an imaginary quadratic order")
    roots = embedding_roots(quad, order)
    roots = [x for x in roots if _is_optimal_global(quad, order, x)]
    if not roots:
        return 0
    units = unit_group(order)
    key = {x.coords: x for x in roots}
    parent = {x.coords: x.coords for x in roots}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for x in roots:
        for u in units:
            y = u * x * u.inverse()
            if y.coords in parent:
                union(x.coords, y.coords)
    return len({find(c) for c in parent})


# ---------------------------------------------------------------------------
# trace formula and spinor trace formula


@dataclass
class TraceReport:
    quad: QuadOrder
    order: QuatOrder
    lhs: int
    rhs: int
    h_b: int
    local_factors: dict
    class_counts: list

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs

    def to_jsonable(self):
        return {
            "B": {"m": self.quad.m, "f": self.quad.f},
            "discO": self.order.disc,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "hB": self.h_b,
            "localFactors": {str(p): v for p, v in sorted(self.local_factors.items())},
            "classCounts": self.class_counts,
            "ok": self.ok,
        }


def local_factor_product(quad: QuadOrder, order: QuatOrder) -> tuple[int, dict]:
    factors = {}
    prod = 1
    for p in sorted(factorize(order.disc * quad.disc)):
        mp = local_embed_count(quad, order, p)
        factors[p] = mp
        prod *= mp
    return prod, factors


def verify_trace_formula(quad: QuadOrder, order: QuatOrder, cls: ClassSet | None = None) -> TraceReport:
    """sum_{[I]} m(B, O_l(I), O_l(I)^x) = h(B) prod_p m_p(B), both sides exact."""
    if cls is None:
        cls = class_set(order)
    counts = [global_embed_count(quad, lo) for lo in cls.left_orders]
    lhs = sum(counts)
    h_b = quad_class_number(quad)
    prod, factors = local_factor_product(quad, order)
    rhs = h_b * prod
    return TraceReport(quad, order, lhs, rhs, h_b, factors, counts)


@dataclass
class SpinorTraceReport:
    quad: QuadOrder
    order: QuatOrder
    hypothesis_met: bool
    selective: bool
    s_symbol: int
    scl_size: int
    per_class: list  # (label-readable, lhs, delta, rhs)
    ok: bool
    pairwise_equal_ok: bool
    genus_invariance_ok: bool | None

    def to_jsonable(self):
        return {
            "B": {"m": self.quad.m, "f": self.quad.f},
            "discO": self.order.disc,
            "hypothesisMet": self.hypothesis_met,
            "selective": self.selective,
            "sSymbol": self.s_symbol,
            "sclSize": self.scl_size,
            "perClass": [
                {"label": lbl, "lhs": str(lhs), "delta": d, "rhs": str(rhs)}
                for (lbl, lhs, d, rhs) in self.per_class
            ],
            "ok": self.ok,
            "pairwiseEqualOk": self.pairwise_equal_ok,
            "genusInvarianceOk": self.genus_invariance_ok,
        }


def _label_readable(label):
    return [sorted(c.rep for c in coset) for coset in label]


def verify_spinor_trace_formula(
    quad: QuadOrder,
    order: QuatOrder,
    cls: ClassSet | None = None,
    check_genus_invariance: bool = False,
) -> SpinorTraceReport:
    """Per spinor class: sum of embedding numbers = 2^s Delta h(B) prod m_p / |SCl|."""
    if cls is None:
        cls = class_set(order)
    group = spinor_mod.spinor_class_group(order)
    h_b = quad_class_number(quad)
    prod, factors = local_factor_product(quad, order)
    counts = [global_embed_count(quad, lo) for lo in cls.left_orders]
    in_sigma = spinor_mod.k_in_sigma(quad.m, order)
    s_symbol = 1 if in_sigma else 0
    selective = False
    report = None
    if prod > 0:
        report = spinor_mod.selectivity(quad, order)
        selective = report.selective
    hypothesis_met = (not in_sigma) or selective or prod == 0
    # Delta per spinor class
    labels = group.elements()
    label_delta = {}
    if prod == 0:
        for lbl in labels:
            label_delta[lbl] = 0  # no embeddings anywhere
    elif not selective:
        for lbl in labels:
            label_delta[lbl] = 1
    else:
        ref = None
        for i, c in enumerate(counts):
            if c > 0:
                ref = cls.spinor_labels[i]
                break
        assert ref is not None, "condition (*) holds, so some class embeds B"
        kernel = {lbl for lbl in report.kernel_classes}
        for lbl in labels:
            diff = group.combine(lbl, ref)  # lbl - ref in the 2-group
            label_delta[lbl] = 1 if diff in kernel else 0
    per_class = []
    ok = True
    sums = {}
    for lbl in labels:
        idxs = cls.classes_with_label(lbl)
        lhs = sum(counts[i] for i in idxs)
        sums[lbl] = lhs
        if prod == 0:
            rhs = Fraction(0)
        else:
            rhs = Fraction(2 ** s_symbol * label_delta[lbl] * h_b * prod, group.size)
        if hypothesis_met and Fraction(lhs) != rhs:
            ok = False
        per_class.append((_label_readable(lbl), lhs, label_delta[lbl], rhs))
    # pairwise equality among Delta = 1 classes (eq of sums)
    pairwise_ok = True
    ones = [lbl for lbl in labels if label_delta[lbl] == 1]
    for l1 in ones:
        for l2 in ones:
            if sums[l1] != sums[l2]:
                pairwise_ok = False
    genus_ok = None
    if check_genus_invariance:
        genus_ok = _check_spinor_genus_invariance(quad, order, cls, sums, group)
    if not hypothesis_met:
        ok = all(
            Fraction(sums[lbl]) == Fraction(2 ** s_symbol * label_delta[lbl] * h_b * prod, group.size)
            for lbl in labels
        )
        # reported, not asserted: this is the open third case
    return SpinorTraceReport(
        quad=quad,
        order=order,
        hypothesis_met=hypothesis_met,
        selective=selective,
        s_symbol=s_symbol,
        scl_size=group.size,
        per_class=per_class,
        ok=ok,
        pairwise_equal_ok=pairwise_ok,
        genus_invariance_ok=genus_ok,
    )


def _check_spinor_genus_invariance(quad, order, cls, sums, group):
    """eq-style check: a conjugate order (same spinor genus, definite case)
    carries the same per-spinor-class sums."""
    import random as _random

    rng = _random.Random(5)
    alg = order.algebra
    while True:
        x = alg.element(tuple(rng.randrange(-2, 3) for _ in range(4)))
        if x.nrd() != 0:
            break
    conj_lat = order.lattice.multiply_element(x, "left").multiply_element(x.inverse(), "right")
    order2 = order_closure_check(conj_lat)
    cls2 = class_set(order2)
    group2 = spinor_mod.spinor_class_group(order2)
    counts2 = [global_embed_count(quad, lo) for lo in cls2.left_orders]
    sums2 = {}
    for lbl, idxs in ((lbl, [i for i, l in enumerate(cls2.spinor_labels) if l == lbl]) for lbl in group2.elements()):
        sums2[lbl] = sum(counts2[i] for i in idxs)
    # the identity labels correspond under conjugation (same local data)
    return sums[group.identity()] == sums2[group2.identity()] and sorted(sums.values()) == sorted(sums2.values())


# ---------------------------------------------------------------------------
# the D_{p,infinity} experiment


@dataclass
class DpinfReport:
    p: int
    h: int
    type_count: int
    types_with_embedding: int
    unit_sizes: list
    mass: Fraction

    def to_jsonable(self):
        return {
            "p": self.p,
            "h": self.h,
            "types": self.type_count,
            "embeddingTypes": self.types_with_embedding,
            "unitSizes": self.unit_sizes,
            "mass": str(self.mass),
        }


def type_set(cls: ClassSet) -> list:
    """Indices of class reps whose left orders represent distinct types."""
    reps = []
    for i, oi in enumerate(cls.left_orders):
        is_new = True
        for j in reps:
            oj = cls.left_orders[j]
            conn = spinor_mod.connecting_ideal(oi, oj)
            if is_principal(conn) is not None:
                is_new = False
                break
        if is_new:
            reps.append(i)
    return reps


def dpinf_experiment(p: int) -> DpinfReport:
    """Type set of maximal orders in D_{p,infinity} and which types admit an
    optimal embedding of Z[sqrt(-1)]; for p = 3 mod 4 exactly one should."""
    if p % 4 != 3:
        raise ValueError("the experiment needs p = 3 mod 4")
    from .quat import definite_algebra_with_disc

    alg = definite_algebra_with_disc(p)
    omax = maximal_order(alg)
    cls = class_set(omax)
    types = type_set(cls)
    quad = QuadOrder(-1, 1)
    embed_types = 0
    for i in types:
        if global_embed_count(quad, cls.left_orders[i]) > 0:
            embed_types += 1
    return DpinfReport(
        p=p,
        h=cls.h,
        type_count=len(types),
        types_with_embedding=embed_types,
        unit_sizes=cls.unit_sizes,
        mass=cls.mass_target,
    )

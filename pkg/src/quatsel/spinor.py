"""The class-field layer over Q, computed dually through finite local data.

The spinor genus field is represented by the set of quadratic fields inside
it (every relevant character of Q is a Kronecker character, so membership
reduces to finitely many local norm conditions).  The spinor class group is
a product of local unit-square-class quotients; over Q no global correction
is needed because the narrow class number is 1 and the only totally
positive rational that is a unit everywhere is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConditionStarFailsError,
    HypothesisViolationError,
    NotEmbeddableError,
    NotSameGenusError,
)
from .numthy import (
    INF,
    QuadOrder,
    factorize,
    hilbert_symbol,
    kronecker_symbol,
    local_norm_group,
    square_class,
    squarefree_part,
    unit_square_classes,
    valuation,
)
from .quat import QuatOrder, RightIdeal, lattice_product, left_order, right_order
from .localorder import (
    certify_locally_principal,
    eichler_invariant,
    embedding_norm_group,
    local_embed_count,
    normalizer_norms,
    unit_norm_classes,
)


def bad_primes(order: QuatOrder) -> list:
    return sorted(factorize(2 * order.disc))


# ---------------------------------------------------------------------------
# spinor genus field


@dataclass(frozen=True)
class SpinorGenusField:
    bad_primes: tuple
    members: frozenset  # squarefree m with Q(sqrt m) inside Sigma_G
    definite: bool

    @property
    def degree(self) -> int:
        return len(self.members) + 1

    def __contains__(self, m: int) -> bool:
        return m in self.members


_SGF_CACHE: dict = {}


def spinor_genus_field(order: QuatOrder) -> SpinorGenusField:
    """All quadratic Q(sqrt m) with Nr(N(O_p)) <= Nm(K_p^x) everywhere and the
    right behaviour at the real place."""
    key = order.lattice
    if key in _SGF_CACHE:
        return _SGF_CACHE[key]
    bad = bad_primes(order)
    definite = order.algebra.is_definite
    members = set()
    subsets = [[]]
    for p in bad:
        subsets += [s + [p] for s in subsets]
    for sub in subsets:
        m = 1
        for p in sub:
            m *= p
        if definite:
            m = -m
        if m == 1:
            continue
        if _k_in_sigma_checked(m, order, bad):
            members.add(m)
    # group structure: members + {1} closed under product-mod-squares
    for m1 in members:
        for m2 in members:
            prod = squarefree_part(m1 * m2)
            assert prod == 1 or prod in members, "member set is not a subgroup"
    assert (len(members) + 1) & len(members) == 0, "degree is not a power of 2"
    res = SpinorGenusField(tuple(bad), frozenset(members), definite)
    _SGF_CACHE[key] = res
    return res


def _k_in_sigma_checked(m: int, order: QuatOrder, bad: list) -> bool:
    disc_k = m if m % 4 == 1 else 4 * m
    for p in factorize(disc_k):
        if p not in bad:
            return False  # Sigma_G/Q is unramified outside the bad set
    if order.algebra.is_definite != (m < 0):
        return False
    for p in bad:
        if not normalizer_norms(order, p).subgroup.issubset(local_norm_group(m, p)):
            return False
    return True


def k_in_sigma(m: int, order: QuatOrder) -> bool:
    """Membership of K = Q(sqrt m) in the spinor genus field of O."""
    m = squarefree_part(m)
    if m == 1:
        raise ValueError("K must be a genuine quadratic field")
    for p in order.algebra.ram:
        if p is INF:
            if m > 0:
                raise NotEmbeddableError("real K cannot embed into a definite algebra")
        elif kronecker_symbol(m, p) == 1:
            raise NotEmbeddableError(f"{p} is ramified in D and split in K")
    return _k_in_sigma_checked(m, order, bad_primes(order))


# ---------------------------------------------------------------------------
# spinor class group SCl(O) and ideal labels


@dataclass(frozen=True)
class SpinorClassGroup:
    """Product over bad primes of (unit square classes at p) / Nr(O_p^x).

    Elements are tuples of canonical coset representatives, ordered by prime.
    """

    primes: tuple
    cosets: tuple  # per prime: tuple of frozensets of SquareClass
    unit_norm_subgroups: tuple

    @property
    def size(self) -> int:
        n = 1
        for c in self.cosets:
            n *= len(c)
        return n

    def elements(self) -> list:
        out = [()]
        for cs in self.cosets:
            out = [e + (c,) for e in out for c in cs]
        return out

    def identity(self):
        return tuple(next(c for c in cs if square_class(1, p) in c) for p, cs in zip(self.primes, self.cosets))

    def coset_of(self, p: int, cls) -> frozenset:
        i = self.primes.index(p)
        for c in self.cosets[i]:
            if cls in c:
                return c
        raise ValueError("class outside the unit square classes")

    def combine(self, e1, e2):
        out = []
        for i, p in enumerate(self.primes):
            c1 = next(iter(e1[i]))
            c2 = next(iter(e2[i]))
            out.append(self.coset_of(p, c1 * c2))
        return tuple(out)


_SCL_CACHE: dict = {}


def spinor_class_group(order: QuatOrder) -> SpinorClassGroup:
    key = order.lattice
    if key in _SCL_CACHE:
        return _SCL_CACHE[key]
    primes = tuple(bad_primes(order))
    cosets = []
    subs = []
    for p in primes:
        nr = unit_norm_classes(order, p)
        units = unit_square_classes(p)
        remaining = set(units)
        pc = []
        while remaining:
            c = remaining.pop()
            coset = frozenset(c * n for n in nr.members)
            remaining -= coset
            pc.append(coset)
        cosets.append(tuple(sorted(pc, key=lambda s: sorted(x.rep for x in s))))
        subs.append(nr)
    res = SpinorClassGroup(primes, tuple(cosets), tuple(subs))
    _SCL_CACHE[key] = res
    return res


def spinor_class_of_ideal(ideal: RightIdeal, group: SpinorClassGroup | None = None):
    """Label of a locally principal right ideal in SCl(O).

    The idele (nrd u_p)_p is normalized by the global rational Nr(I), making
    every component a p-adic unit; the label is the vector of its cosets.
    """
    order = ideal.order
    if group is None:
        group = spinor_class_group(order)
    label = []
    nr_i = ideal.nrd
    for i, p in enumerate(group.primes):
        u_p = _local_generator(ideal, p)
        val = u_p.nrd() / nr_i
        assert valuation(val, p) == 0
        label.append(group.coset_of(p, square_class(val, p)))
    return tuple(label)


def _local_generator(ideal: RightIdeal, p: int):
    if ideal.lattice == ideal.order.lattice:
        return ideal.order.algebra.one()
    return certify_locally_principal(ideal, p)


def spinor_genus_quotient_label(order: QuatOrder, label, group: SpinorClassGroup):
    """Push an SCl label through SCl(O) ->> SG(O) (quotient by normalizer
    unit-norm classes); returns a tuple of frozensets of unit classes."""
    out = []
    for i, p in enumerate(group.primes):
        nn = normalizer_norms(order, p).subgroup
        units = set(unit_square_classes(p))
        rep = next(iter(label[i]))
        coset = frozenset(c for c in (rep * n for n in nn.members) if c in units)
        out.append(coset)
    return tuple(out)


# ---------------------------------------------------------------------------
# rho: the distance map into Gal(Sigma_G / Q)


def connecting_ideal(o_left: QuatOrder, o_right: QuatOrder) -> RightIdeal:
    """Lattice I with O_l(I) = o_left and O_r(I) = o_right (same genus).

    The product O' O works for most pairs; when its multiplier orders grow,
    translated products O' z O are tried (each candidate is verified exactly,
    so a wrong guess can never leak through).
    """
    import random as _random

    alg = o_left.algebra
    candidates = [None]
    basis = o_left.basis_elements() + o_right.basis_elements()
    candidates += basis
    rng = _random.Random(31)
    for _ in range(40):
        z = alg.element(tuple(rng.randrange(-3, 4) for _ in range(4)))
        if z.nrd() != 0:
            candidates.append(z)
    for z in candidates:
        if z is None:
            cand = lattice_product(o_left.lattice, o_right.lattice)
        elif z.nrd() == 0:
            continue
        else:
            cand = lattice_product(o_left.lattice, o_right.lattice.multiply_element(z, "left"))
        ol = left_order(cand)
        if ol.lattice != o_left.lattice:
            continue
        orr = right_order(cand)
        if orr.lattice == o_right.lattice:
            return RightIdeal(cand, o_right)
    raise NotSameGenusError("could not build a connecting ideal with the required orders")


def rho_restrictions(o1: QuatOrder, o2: QuatOrder, members) -> dict:
    """rho(O1, O2) restricted to each Q(sqrt m), as bits {0, 1}.

    Computed from local generators of a linking ideal: the restriction to
    Q(sqrt m) is the product of Hilbert symbols (m, nrd u_p)_p.  Local
    principality certificates double as the same-genus proof.
    """
    if o1.disc != o2.disc:
        raise NotSameGenusError("different reduced discriminants")
    ideal = connecting_ideal(o1, o2)
    support = set(bad_primes(o2)) | set(factorize(Fraction(ideal.nrd).numerator)) | set(
        factorize(Fraction(ideal.nrd).denominator)
    )
    gens = {}
    for p in sorted(support):
        gens[p] = _local_generator(ideal, p)
    out = {}
    for m in members:
        places = set(support) | set(factorize(m if m % 4 == 1 else 4 * m))
        bit = 0
        for p in sorted(places):
            u = gens.get(p)
            nrd_u = u.nrd() if u is not None else Fraction(1)
            if hilbert_symbol(m, nrd_u, p) == -1:
                bit ^= 1
        out[m] = bit
    return out


def rho(o1: QuatOrder, o2: QuatOrder) -> dict:
    members = spinor_genus_field(o1).members
    return rho_restrictions(o1, o2, sorted(members))


# ---------------------------------------------------------------------------
# selectivity


@dataclass
class SelectivityReport:
    quad: QuadOrder
    k_in_sigma: bool
    s_set: tuple
    per_prime: dict  # p -> EmbeddingNormData
    selective: bool
    s_symbol: int
    kernel_classes: list  # SCl labels with trivial restriction (half if selective)
    group: SpinorClassGroup

    def to_jsonable(self) -> dict:
        return {
            "B": {"m": self.quad.m, "f": self.quad.f},
            "K_in_Sigma": self.k_in_sigma,
            "S": list(self.s_set),
            "perPrime": {
                str(p): {
                    "NrE": sorted(c.rep for c in d.subgroup.members),
                    "equalsNorms": d.is_full is False and not d.inconclusive or d.is_full,
                    "isFullGroup": d.is_full,
                    "inconclusive": d.inconclusive,
                }
                for p, d in self.per_prime.items()
            },
            "selective": self.selective,
            "sSymbol": self.s_symbol,
            "selectedClasses": [
                [sorted(x.rep for x in coset) for coset in label] for label in self.kernel_classes
            ],
        }


def condition_star_holds(quad: QuadOrder, order: QuatOrder) -> bool:
    for p in sorted(factorize(order.disc * quad.disc)):
        if local_embed_count(quad, order, p) == 0:
            return False
    return True


def selectivity(quad: QuadOrder, order: QuatOrder) -> SelectivityReport:
    """The optimal spinor selectivity test for (B, genus of O)."""
    m = quad.m
    for p in order.algebra.ram:
        if p is INF:
            if m > 0:
                raise NotEmbeddableError("real K cannot embed into a definite algebra")
        elif kronecker_symbol(m, p) == 1:
            raise NotEmbeddableError(f"{p} ramified in D and split in K")
    if not condition_star_holds(quad, order):
        raise ConditionStarFailsError("some local optimal embedding count vanishes")
    in_sigma = k_in_sigma(m, order)
    s_set = tuple(
        p for p in sorted(factorize(order.disc))
        if eichler_invariant(order, p) == 0 and quad.kronecker(p) != 1
    )
    per_prime = {}
    selective = in_sigma
    for p in s_set:
        data = embedding_norm_group(quad, order, p)
        per_prime[p] = data
        target = local_norm_group(m, p)
        if data.subgroup != target:
            selective = False
    group = spinor_class_group(order)
    kernel = []
    if selective:
        kernel = [lbl for lbl in group.elements() if _chi(m, group, lbl) == 0]
        assert 2 * len(kernel) == group.size, "selectivity must split SCl in half"
    return SelectivityReport(
        quad=quad,
        k_in_sigma=in_sigma,
        s_set=s_set,
        per_prime=per_prime,
        selective=selective,
        s_symbol=1 if in_sigma else 0,
        kernel_classes=kernel,
        group=group,
    )


def _chi(m: int, group: SpinorClassGroup, label) -> int:
    """Restriction-to-Q(sqrt m) character evaluated on an SCl label."""
    bit = 0
    for i, p in enumerate(group.primes):
        rep = next(iter(label[i]))
        if hilbert_symbol(m, Fraction(rep.rep), p) == -1:
            bit ^= 1
    return bit


def chi_on_label(m: int, group: SpinorClassGroup, label) -> int:
    return _chi(m, group, label)


def delta(quad: QuadOrder, order: QuatOrder, order_ref: QuatOrder, report: SelectivityReport | None = None) -> int:
    """Delta(B, O) given a reference order with Delta(B, O_ref) = 1."""
    if report is None:
        report = selectivity(quad, order)
    if not report.selective:
        return 1
    bit = rho_restrictions(order, order_ref, [quad.m])[quad.m]
    return (bit + 1) % 2


# ---------------------------------------------------------------------------
# Maclachlan's relative conductor formula


def is_eichler(order: QuatOrder) -> bool:
    d_alg = order.algebra.discriminant
    for p in factorize(order.disc):
        e = eichler_invariant(order, p)
        if d_alg % p == 0:
            if valuation(order.disc, p) != 1 or e != -1:
                return False
        else:
            if e != 1:
                return False
    return True


def relative_conductor_symbol(quad: QuadOrder, quad_ref: QuadOrder, m: int) -> int:
    """Artin symbol bit of f(B'/B) = f(B)/f(B') for K = Q(sqrt m)."""
    frel = Fraction(quad.f, quad_ref.f)
    bit = 0
    for q in set(factorize(frel.numerator)) | set(factorize(frel.denominator)):
        sym = kronecker_symbol(m, q)
        if sym == 0:
            raise HypothesisViolationError("relative conductor meets a ramified prime of K")
        if sym == -1 and valuation(frel, q) % 2:
            bit ^= 1
    return bit


def maclachlan_combine(conductor_bit: int, rho_bit: int, delta_ref: int) -> int:
    """Delta(B, O) = (f(B'/B), K) + rho(O, O')|_K + Delta(B', O') in Z/2."""
    return (conductor_bit + rho_bit + delta_ref) % 2


def maclachlan_delta(
    quad: QuadOrder,
    quad_ref: QuadOrder,
    order: QuatOrder,
    order_ref: QuatOrder,
    delta_ref: int,
) -> int:
    """The relative-conductor formula for Eichler orders of arbitrary level."""
    if quad.m != quad_ref.m:
        raise HypothesisViolationError("B and B' must sit in the same quadratic field")
    if not (is_eichler(order) and is_eichler(order_ref)) or order.disc != order_ref.disc:
        raise HypothesisViolationError("both orders must be Eichler of the same level")
    level = order.disc // order.algebra.discriminant
    for quad_x in (quad, quad_ref):
        for p in factorize(level):
            if quad_x.kronecker(p) == 0:
                raise HypothesisViolationError("condition (*) check needs p unramified in K")
            n_p = valuation(level, p)
            if not (quad_x.kronecker(p) == 1 or n_p <= 2 * quad_x.i_p(p)):
                raise HypothesisViolationError("condition (*) fails at a level prime")
    if not k_in_sigma(quad.m, order):
        raise HypothesisViolationError("K is not inside the spinor genus field")
    cond_bit = relative_conductor_symbol(quad, quad_ref, quad.m)
    rho_bit = rho_restrictions(order, order_ref, [quad.m])[quad.m]
    return maclachlan_combine(cond_bit, rho_bit, delta_ref)

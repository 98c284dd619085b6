import random
from fractions import Fraction

import pytest

from quatsel.errors import NotLocallyPrincipalError
from quatsel.localorder import (
    certify_locally_principal,
    eichler_invariant,
    embedding_norm_group,
    guo_qin_test,
    local_embed_count,
    local_profile,
    local_unit_index,
    normalizer_norms,
    optimality_defect,
    precision_for,
    unit_norm_classes,
    _defect,
    _optimal_orbit_reps,
)
from quatsel.numthy import (
    QuadOrder,
    SquareClassSubgroup,
    full_square_class_group,
    local_norm_group,
    square_class,
    unit_square_classes,
    valuation,
)
from quatsel.quat import (
    QuatLattice,
    RightIdeal,
    definite_algebra_with_disc,
    eichler_order,
    make_algebra,
    maximal_order,
    order_closure_check,
    principal_ideal,
    standard_order,
)
from quatsel.residue import radical_brute_force, radical_mod_p


def hurwitz():
    return maximal_order(definite_algebra_with_disc(2))


def z_plus_f(order, f):
    alg = order.algebra
    rows = [[Fraction(1), 0, 0, 0]] + [
        [f * Fraction(v, order.lattice.den) for v in r] for r in order.lattice.mat
    ]
    return order_closure_check(QuatLattice.from_rows(alg, rows))


def crossed_order(f):
    alg = definite_algebra_with_disc(2)
    return order_closure_check(
        QuatLattice.from_rows(alg, [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, f, 0), (0, 0, 0, f)])
    )


# --- radical ------------------------------------------------------------------


def test_radical_against_brute_force():
    alg2 = definite_algebra_with_disc(2)
    alg3 = definite_algebra_with_disc(3)
    cases = [
        (hurwitz(), [2, 3]),
        (standard_order(alg2), [2]),
        (maximal_order(alg3), [2, 3]),
        (eichler_order(make_algebra(1, 1), 9), [2, 3]),
        (eichler_order(alg3, 4), [2, 3]),
        (z_plus_f(hurwitz(), 2), [2]),
        (crossed_order(2), [2, 5]),
    ]
    for order, ps in cases:
        for p in ps:
            ring = order.residue_ring(p, 1)
            assert radical_mod_p(ring) == radical_brute_force(ring), (order, p)


# --- Eichler invariants ---------------------------------------------------------


def test_eichler_invariant_paper_dichotomies():
    assert eichler_invariant(maximal_order(make_algebra(-1, -11)), 11) == -1
    assert eichler_invariant(eichler_order(make_algebra(1, 1), 3), 3) == 1
    assert eichler_invariant(hurwitz(), 5) == 2
    assert eichler_invariant(hurwitz(), 2) == -1
    assert eichler_invariant(standard_order(definite_algebra_with_disc(2)), 2) == 0
    assert eichler_invariant(z_plus_f(hurwitz(), 2), 2) == 0
    assert eichler_invariant(z_plus_f(hurwitz(), 3), 3) == 0
    assert eichler_invariant(crossed_order(4), 2) == 0


def test_eichler_invariant_unit_norm_link():
    # e_p != 0 forces full unit norm classes
    for order, p in [
        (hurwitz(), 2),
        (maximal_order(definite_algebra_with_disc(3)), 3),
        (eichler_order(definite_algebra_with_disc(2), 9), 3),
    ]:
        assert eichler_invariant(order, p) != 0
        full_units = SquareClassSubgroup(p, unit_square_classes(p))
        assert unit_norm_classes(order, p) == full_units


# --- local embedding counts -----------------------------------------------------


def test_local_embed_good_prime_is_one():
    hur = hurwitz()
    for p, quad in [(3, QuadOrder(-1, 1)), (5, QuadOrder(-3, 1)), (7, QuadOrder(-2, 1))]:
        assert local_embed_count(quad, hur, p) == 1


def test_local_embed_frozen_values():
    hur = hurwitz()
    assert local_embed_count(QuadOrder(-1, 1), hur, 2) == 1
    assert local_embed_count(QuadOrder(-2, 1), hur, 2) == 1
    assert local_embed_count(QuadOrder(-3, 1), hur, 2) == 2  # inert maximal: 1 - (K/2)
    assert local_embed_count(QuadOrder(-3, 2), hur, 2) == 0  # conductor at a division prime
    m11 = maximal_order(definite_algebra_with_disc(11))
    assert local_embed_count(QuadOrder(-7, 1), m11, 11) == 0  # split K at ramified p
    assert local_embed_count(QuadOrder(-11, 1), m11, 11) == 1  # ramified K, maximal B


def test_guo_qin_zero_case():
    e9 = eichler_order(definite_algebra_with_disc(2), 9)
    # (K/3) = -1 for m = -1; level valuation 2 > 2*i_3 = 0
    assert local_embed_count(QuadOrder(-1, 1), e9, 3) == 0
    assert not guo_qin_test(QuadOrder(-1, 1), 2, 3)
    assert guo_qin_test(QuadOrder(-1, 3), 2, 3)
    assert guo_qin_test(QuadOrder(-11, 1), 7, 3)  # split: any level
    assert not guo_qin_test(QuadOrder(-1, 1), 3, 3)
    with pytest.raises(ValueError):
        guo_qin_test(QuadOrder(-3, 1), 1, 3)  # ramified p rejected


def test_guo_qin_matches_brute_force_on_eichler_levels():
    alg = definite_algebra_with_disc(2)
    for level, p in [(3, 3), (9, 3), (5, 5)]:
        order = eichler_order(alg, level)
        n_p = valuation(level, p)
        for m, f in [(-1, 1), (-1, 3), (-11, 1), (-2, 1), (-2, 3)]:
            quad = QuadOrder(m, f)
            if quad.kronecker(p) == 0:
                continue
            predicted = guo_qin_test(quad, n_p, p)
            assert (local_embed_count(quad, order, p) > 0) == predicted, (level, p, m, f)


def test_optimality_defect():
    hur = hurwitz()
    quad = QuadOrder(-1, 2)  # omega = 2i
    p, k = 2, precision_for(2, hur, quad)
    ring = hur.residue_ring(p, k)
    # the image of 2i has defect 1: (x - 0)/2 = i lies in O
    two_i = hur.lattice.coordinates_of(hur.algebra.element((0, 2, 0, 0)))
    x = tuple(int(c) % ring.q for c in two_i)
    assert optimality_defect(hur, p, x, quad) == 1
    # the image of i for B = Z[i] has defect 0
    i_el = hur.lattice.coordinates_of(hur.algebra.element((0, 1, 0, 0)))
    xi = tuple(int(c) % ring.q for c in i_el)
    assert optimality_defect(hur, p, xi, QuadOrder(-1, 1)) == 0
    # conjugation invariance over 100 random units
    rng = random.Random(4)
    for _ in range(100):
        u = ring.random_unit(rng)
        assert _defect(ring, ring.conjugate_by(u, xi), cap=2) == 0
        assert _defect(ring, ring.conjugate_by(u, x), cap=3) == 1


# --- normalizer norms ------------------------------------------------------------


def test_normalizer_closed_form_e_nonzero():
    # eq-266-style dichotomy, brute force vs closed form
    alg2 = definite_algebra_with_disc(2)
    alg3 = definite_algebra_with_disc(3)
    cases = [
        (hurwitz(), 2),
        (maximal_order(alg3), 3),
        (eichler_order(alg2, 9), 3),
        (eichler_order(alg2, 3), 3),
        (eichler_order(alg3, 4), 2),
        (eichler_order(make_algebra(1, 1), 9), 3),
    ]
    for order, p in cases:
        e = eichler_invariant(order, p)
        assert e != 0
        nd = normalizer_norms(order, p)
        if valuation(order.disc, p) % 2 == 0:
            assert nd.subgroup == SquareClassSubgroup(p, unit_square_classes(p))
            assert not nd.has_odd_valuation
        else:
            assert nd.subgroup == full_square_class_group(p)
            assert nd.has_odd_valuation


def test_normalizer_crossed_orders_frozen():
    # computed values, stable under the exactness of the two-sided search
    nd2 = normalizer_norms(crossed_order(2), 2)
    assert {c.rep for c in nd2.subgroup.members} == {1, 2, 3, 5, 6, 7, 10, 14}
    nd4 = normalizer_norms(crossed_order(4), 2)
    assert {c.rep for c in nd4.subgroup.members} == {1, 2, 5, 10}
    assert nd4.has_odd_valuation
    # Z + 2*Hurwitz: unit norms are already everything
    ndz = normalizer_norms(z_plus_f(hurwitz(), 2), 2)
    assert {c.rep for c in unit_norm_classes(z_plus_f(hurwitz(), 2), 2).members} == {1, 3, 5, 7}


def test_local_profile_assembles():
    prof = local_profile(crossed_order(4), 2)
    assert prof.eichler == 0
    assert prof.has_odd_valuation


# --- embedding norm groups --------------------------------------------------------


def test_embedding_norm_group_eichler_and_minus_one():
    # e_p in {-1, 1, 2}: Nr(E_p) equals Nm(K_p) Nr(N(O_p)) (paper identities)
    hur = hurwitz()
    e9 = eichler_order(definite_algebra_with_disc(2), 9)
    cases = [
        (QuadOrder(-1, 1), hur, 2),     # e = -1
        (QuadOrder(-3, 1), hur, 2),     # e = -1, inert
        (QuadOrder(-1, 3), e9, 3),      # e = 1 Eichler
        (QuadOrder(-3, 1), maximal_order(definite_algebra_with_disc(3)), 3),
    ]
    for quad, order, p in cases:
        if local_embed_count(quad, order, p) == 0:
            continue
        data = embedding_norm_group(quad, order, p)
        lower = local_norm_group(quad.m, p).join(normalizer_norms(order, p).subgroup)
        assert data.subgroup == lower, (quad, order.disc, p)


def test_embedding_norm_group_split_is_full():
    hur = hurwitz()
    data = embedding_norm_group(QuadOrder(-7, 1), hur, 2)  # -7 = 1 mod 8: split
    assert data.is_full


def test_embedding_norm_group_crossed4_selective_values():
    cr4 = crossed_order(4)
    d1 = embedding_norm_group(QuadOrder(-1, 1), cr4, 2)
    assert {c.rep for c in d1.subgroup.members} == {1, 2, 5, 10}
    assert not d1.is_full


# --- local principality ------------------------------------------------------------


def test_certify_locally_principal():
    rng = random.Random(9)
    hur = hurwitz()
    one = certify_locally_principal(RightIdeal(hur.lattice, hur, validate=False), 2)
    assert valuation(one.nrd(), 2) == 0
    for _ in range(6):
        x = hur.algebra.element(tuple(rng.randrange(-3, 4) for _ in range(4)))
        if x.nrd() == 0:
            continue
        ideal = principal_ideal(hur, x)
        for p in (2, 3, 5):
            u = certify_locally_principal(ideal, p)
            assert valuation(u.nrd(), p) == valuation(ideal.nrd, p)
    # trap: the Hurwitz lattice as a module over Z + 2*Hurwitz is not locally
    # principal at 2 (index 8 but norm 1)
    z2 = z_plus_f(hur, 2)
    trap = RightIdeal(hur.lattice, z2, validate=False)
    with pytest.raises(NotLocallyPrincipalError):
        certify_locally_principal(trap, 2)


# --- local unit index (mass input) ---------------------------------------------------


def test_local_unit_index_values():
    hur = hurwitz()
    lip = standard_order(definite_algebra_with_disc(2))
    # [Hurwitz_2^x : Lipschitz_2^x] = 3 (index 2 lattice, unit count ratio 2/1... )
    idx = local_unit_index(lip, hur, 2)
    assert idx == 3
    z2 = z_plus_f(hur, 2)
    idx2 = local_unit_index(z2, hur, 2)
    # mass(Z+2Hur) = idx2/24 must make a consistent integer-weighted class set
    assert idx2 * Fraction(1, 24) == Fraction(idx2, 24)


def test_precision_policy_monotone():
    hur = hurwitz()
    assert precision_for(3, hur) == 3
    assert precision_for(2, hur) == 6
    assert precision_for(2, hur, QuadOrder(-1, 1)) == 10
    assert precision_for(2, hur, QuadOrder(-1, 2)) > precision_for(2, hur, QuadOrder(-1, 1)) - 1

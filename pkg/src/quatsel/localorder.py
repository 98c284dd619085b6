"""p-local invariants of quaternion orders via residue rings O/p^k.

Everything is finite and exact.  Where a result is only determined up to a
working precision, it is recomputed at precision k+2 and a disagreement
raises PrecisionUnstableError instead of guessing (the sources give no
effective precision bounds, so stability escalation is the honest
substitute).  Searches with genuinely unknown valuation bounds carry
explicit certification flags.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import NotLocallyPrincipalError, PrecisionUnstableError
from .linalg import kernel_mod_prime_power, solve_row_mod
from .numthy import (
    QuadOrder,
    SquareClassSubgroup,
    full_square_class_group,
    least_nonresidue,
    square_class,
    valuation,
)
from .quat import QuatOrder, RightIdeal
from .residue import ResidueRing, radical_mod_p, solve_linear_mod_p

_UNIT_VECS = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]

# extra levels added by the CLI's --precision flag
PRECISION_BUMP = 0


def precision_for(p: int, order: QuatOrder, quad: QuadOrder | None = None) -> int:
    """Working precision k(p) = 3 + 2 v_p(2) + v_p(d(O)) + 2 v_p(f * disc K)."""
    k = 3 + (2 if p == 2 else 0)
    if order.disc % p == 0:
        k += valuation(order.disc, p)
    if quad is not None:
        extra = quad.f * quad.field_disc
        if extra % p == 0:
            k += 2 * valuation(extra, p)
    return k + PRECISION_BUMP


# ---------------------------------------------------------------------------
# small exact helpers on residue rings


def _affine_contains_unit(ring1: ResidueRing, u0, span_vecs, p: int) -> bool:
    """Does the affine set u0 + <span_vecs> over F_p contain a unit?

    Equivalent to nrd not vanishing identically there.  For p >= 3 a
    quadratic polynomial vanishes on all of F_p^d iff its coefficients
    vanish; for p = 2 the set is small enough to enumerate.
    """
    vecs = [tuple(v % p for v in b) for b in span_vecs]
    vecs = [v for v in dict.fromkeys(vecs) if any(v)]
    if p == 2:
        for r in range(len(vecs) + 1):
            for combo in itertools.combinations(vecs, r):
                x = list(u0)
                for b in combo:
                    x = [(x[t] + b[t]) % 2 for t in range(4)]
                if ring1.nrd(tuple(x)) % 2:
                    return True
        return False
    if ring1.nrd(tuple(u0)) % p:
        return True
    for i, b in enumerate(vecs):
        if ring1.nrd(b) % p:
            return True
        # mixed terms: trd(u0 * conj(b)) and trd(b_i * conj(b_j))
        if _polar(ring1, u0, b) % p:
            return True
        for b2 in vecs[i + 1:]:
            if _polar(ring1, b, b2) % p:
                return True
    return False


def _polar(ring: ResidueRing, x, y) -> int:
    return (ring.nrd(ring.add(x, y)) - ring.nrd(x) - ring.nrd(y)) % ring.q


def _conjugate_equivalent(ring: ResidueRing, w, wp) -> bool:
    """Is wp = u w u^{-1} for some unit u mod p^k?  Exact module test."""
    rows = []
    for e in _UNIT_VECS:
        vec = ring.sub(ring.mul(e, w), ring.mul(wp, e))
        rows.append(list(vec))
    gens = kernel_mod_prime_power(rows, ring.p, ring.k)
    r1 = ring.at_precision(1)
    return _affine_contains_unit(r1, (0, 0, 0, 0), gens, ring.p)


def _one_sided_equivalent(ring: ResidueRing, x, y) -> bool:
    """Is y = u x or y = x v for a unit (exact affine-module test)?"""
    r1 = ring.at_precision(1)
    for side in ("left", "right"):
        if side == "left":
            rows = [list(ring.mul(e, x)) for e in _UNIT_VECS]
        else:
            rows = [list(ring.mul(x, e)) for e in _UNIT_VECS]
        u0 = solve_row_mod(rows, list(y), ring.q)
        if u0 is None:
            continue
        homog = kernel_mod_prime_power(rows, ring.p, ring.k)
        if _affine_contains_unit(r1, tuple(v % ring.p for v in u0), homog, ring.p):
            return True
    return False


# ---------------------------------------------------------------------------
# Eichler invariant


@dataclass(frozen=True)
class LocalProfile:
    p: int
    eichler: int
    nrd_units: SquareClassSubgroup
    nrd_normalizer: SquareClassSubgroup
    has_odd_valuation: bool


_EICHLER_CACHE: dict = {}


def eichler_invariant(order: QuatOrder, p: int) -> int:
    """2 for maximal split; else classify (O/pO)/Jacobson: split k x k -> 1,
    k -> 0, quadratic field extension -> -1."""
    key = (order.lattice, p)
    if key in _EICHLER_CACHE:
        return _EICHLER_CACHE[key]
    if order.disc % p != 0:
        _EICHLER_CACHE[key] = 2
        return 2
    ring = order.residue_ring(p, 1)
    rad = radical_mod_p(ring)
    dim_ss = 4 - len(rad)
    if dim_ss == 4:
        raise AssertionError("semisimple O/pO at a prime dividing the discriminant")
    if dim_ss == 1:
        e = 0
    elif dim_ss == 2:
        e = 1 if _quotient_splits(ring, rad, p) else -1
    else:
        raise AssertionError("impossible semisimple quotient of dimension 3")
    _EICHLER_CACHE[key] = e
    return e


def _quotient_splits(ring: ResidueRing, rad: list, p: int) -> bool:
    """For 2-dim (O/pO)/J: split F_p x F_p vs the field F_{p^2}."""
    span = [list(ring.one)] + [list(v) for v in rad]
    y = None
    for cand in _UNIT_VECS:
        if solve_linear_mod_p(span, list(cand), p) is None:
            y = cand
            break
    assert y is not None, "quotient has dimension >= 2, some basis vector escapes"
    y2 = ring.mul(y, y)
    basis = [list(ring.one), list(y)] + [list(v) for v in rad]
    sol = solve_linear_mod_p(basis, list(y2), p)
    assert sol is not None
    alpha, beta = sol[0][0], sol[0][1]
    # ybar^2 = alpha + beta*ybar in the quotient: split iff X^2 - bX - a has a root
    return any((r * r - beta * r - alpha) % p == 0 for r in range(p))


# ---------------------------------------------------------------------------
# exact unit norm classes Nr(O_p^x) mod squares


_UNIT_NORM_CACHE: dict = {}


def unit_norm_classes(order: QuatOrder, p: int) -> SquareClassSubgroup:
    """Nr(O_p^x) mod squares.  Exact: unit square classes are decided mod p
    (odd p) or mod 8, and units of O/p^k lift to units of O_p."""
    key = (order.lattice, p)
    if key in _UNIT_NORM_CACHE:
        return _UNIT_NORM_CACHE[key]
    diag, polar = _nrd_int_form(order)
    classes = set()
    if p == 2:
        for x in itertools.product(range(8), repeat=4):
            n = _nrd_int(diag, polar, x) % 8
            if n % 2:
                classes.add(square_class(n, 2))
    else:
        seen = set()
        for x in itertools.product(range(p), repeat=4):
            n = _nrd_int(diag, polar, x) % p
            if n and n not in seen:
                seen.add(n)
                classes.add(square_class(n, p))
    sub = SquareClassSubgroup(p, classes)
    _UNIT_NORM_CACHE[key] = sub
    return sub


def _nrd_int_form(order: QuatOrder):
    basis = order.basis_elements()
    diag = [int(b.nrd()) for b in basis]
    polar = [[int((basis[i] * basis[j].conj()).trd()) for j in range(4)] for i in range(4)]
    return diag, polar


def _nrd_int(diag, polar, x) -> int:
    acc = 0
    for i in range(4):
        xi = x[i]
        if not xi:
            continue
        acc += xi * xi * diag[i]
        row = polar[i]
        for j in range(i + 1, 4):
            if x[j]:
                acc += xi * x[j] * row[j]
    return acc


def _trd_pair_int(polar, x, z) -> int:
    """trd(x * conj(z)) via the polarization table."""
    acc = 0
    for i in range(4):
        xi = x[i]
        if not xi:
            continue
        row = polar[i]
        for j in range(4):
            if z[j]:
                acc += xi * z[j] * row[j]
    return acc


# ---------------------------------------------------------------------------
# normalizer norms Nr(N(O_p)) mod squares


@dataclass(frozen=True)
class NormalizerData:
    subgroup: SquareClassSubgroup
    has_odd_valuation: bool


_NORMALIZER_CACHE: dict = {}


def normalizer_norms(order: QuatOrder, p: int) -> NormalizerData:
    """Nr(N(O_p)) mod squares, with a flag for odd-valuation normalizers.

    Any normalizer scales to a primitive x in O with x O conj(x) <= p^w O
    and v_p(nrd x) = w; that two-sided condition depends on x mod p^w only,
    so the level-by-level search is exact.  Frontiers are pruned by the
    two-sided unit action O^x * x * O^x, which moves nrd by unit-norm
    classes that are already included.
    """
    key = (order.lattice, p)
    if key in _NORMALIZER_CACHE:
        return _NORMALIZER_CACHE[key]
    sub = unit_norm_classes(order, p)
    has_odd = False
    w_max = (valuation(order.disc, p) if order.disc % p == 0 else 0) + 1
    full = full_square_class_group(p)
    diag, polar = _nrd_int_form(order)
    ring = order.residue_ring(p, w_max + 1)
    frontier = _two_sided_survivors_mod_p(ring, p)
    for w in range(1, w_max + 1):
        if sub == full:
            break
        if w >= 2:
            frontier = _lift_two_sided(ring, frontier, w - 1)
        if not frontier:
            break
        for x0 in frontier:
            for cls in _achievable_norm_classes(p, diag, polar, x0, w):
                if cls not in sub.members:
                    sub = sub.join(SquareClassSubgroup(p, [cls]))
    has_odd = any(valuation(Fraction(c.rep), p) % 2 == 1 for c in sub.members)
    res = NormalizerData(sub, has_odd)
    _NORMALIZER_CACHE[key] = res
    return res


def _two_sided_survivors_mod_p(ring: ResidueRing, p: int) -> list:
    """Primitive x mod p with x e_i conj(x) = 0 mod p for every basis e_i."""
    r1 = ring.at_precision(1)
    out = []
    for x in itertools.product(range(p), repeat=4):
        if not any(x):
            continue
        if r1.nrd(x) % p:
            continue
        xb = r1.conj(x)
        if all(not any(r1.mul(r1.mul(x, e), xb)) for e in _UNIT_VECS):
            out.append(x)
    return _dedupe_unit_cosets(ring, out, 1)


def _lift_two_sided(ring: ResidueRing, frontier: list, j: int) -> list:
    """Solutions mod p^{j+1} of the two-sided condition over ones mod p^j."""
    p = ring.p
    pj = p ** j
    rj1 = ring.at_precision(j + 1)
    out = []
    for x in frontier:
        xb = rj1.conj(x)
        consts = []
        for e in _UNIT_VECS:
            fx = rj1.mul(rj1.mul(x, e), xb)
            if any(v % pj for v in fx):
                consts = None
                break
            consts.extend((v // pj) % p for v in fx)
        if consts is None:
            continue
        cols = []
        for c in range(4):
            z = _UNIT_VECS[c]
            zb = rj1.conj(z)
            col = []
            for e in _UNIT_VECS:
                term = rj1.add(rj1.mul(rj1.mul(z, e), xb), rj1.mul(rj1.mul(x, e), zb))
                col.extend(v % p for v in term)
            cols.append(col)
        sol = solve_linear_mod_p(cols, [(-v) % p for v in consts], p)
        if sol is None:
            continue
        part, kernel = sol
        for coeffs in itertools.product(range(p), repeat=len(kernel)):
            z = list(part)
            for cf, kv in zip(coeffs, kernel):
                for t in range(4):
                    z[t] = (z[t] + cf * kv[t]) % p
            out.append(tuple((x[t] + pj * z[t]) % rj1.q for t in range(4)))
    return _dedupe_unit_cosets(ring, out, j + 1)


def _dedupe_unit_cosets(ring: ResidueRing, elems: list, level: int) -> list:
    """Quotient by the two-sided unit action, exactly."""
    if not elems:
        return []
    p = ring.p
    q = p ** level
    rl = ring.at_precision(level)
    rng = random.Random(77)
    samples = [rl.random_unit(rng) for _ in range(14)]
    elems = list(dict.fromkeys(tuple(v % q for v in e) for e in elems))
    index = set(elems)
    parent = {e: e for e in elems}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for e in elems:
        for u in samples:
            for cand in (rl.mul(u, e), rl.mul(e, u)):
                if cand in index:
                    union(e, cand)
    groups: dict = {}
    for e in elems:
        groups.setdefault(find(e), []).append(e)
    reps = [v[0] for v in groups.values()]
    merged: list = []
    for r in reps:
        if not any(_one_sided_equivalent(rl, m, r) for m in merged):
            merged.append(r)
    return merged


def _achievable_norm_classes(p: int, diag, polar, x0, w: int):
    """Square classes of nrd over lifts of x0 with v_p(nrd) exactly w."""
    pw = p ** w
    x0 = [int(v) for v in x0]
    n0 = _nrd_int(diag, polar, x0)
    if n0 % pw:
        return []
    out = set()
    if p == 2:
        mod = pw * 8
        for z in itertools.product(range(8), repeat=4):
            val = (n0 + pw * _trd_pair_int(polar, x0, z) + pw * pw * _nrd_int(diag, polar, z)) % mod
            u = val // pw
            if u % 2:
                out.add(square_class(pw * (u % 8), 2))
    else:
        alpha = (n0 // pw) % p
        coeffs = [_trd_pair_int(polar, x0, _UNIT_VECS[c]) % p for c in range(4)]
        if any(coeffs):
            out.add(square_class(pw, p))
            out.add(square_class(pw * least_nonresidue(p), p))
        elif alpha:
            out.add(square_class(pw * alpha, p))
    return out


def local_profile(order: QuatOrder, p: int) -> LocalProfile:
    nd = normalizer_norms(order, p)
    return LocalProfile(
        p=p,
        eichler=eichler_invariant(order, p),
        nrd_units=unit_norm_classes(order, p),
        nrd_normalizer=nd.subgroup,
        has_odd_valuation=nd.has_odd_valuation,
    )


# ---------------------------------------------------------------------------
# optimal embedding counts m_p(B)


def optimality_defect(order: QuatOrder, p: int, x, quad: QuadOrder, k: int | None = None) -> int:
    """Largest e with (x - c)/p^e in O/p^{k-e} for a scalar c.

    The embedding cut out by a root x is optimal for B_p iff the defect is 0;
    defect e means the suborder of conductor f/p^e is the one actually hit.
    """
    if k is None:
        k = precision_for(p, order, quad)
    ring = order.residue_ring(p, k)
    if quad.i_p(p) + 1 >= k:
        raise PrecisionUnstableError("precision too small relative to the conductor valuation")
    return _defect(ring, x, cap=min(quad.i_p(p) + 1, k - 1))


def _defect(ring: ResidueRing, x, cap: int) -> int:
    p = ring.p
    one = ring.one
    piv = next(i for i in range(4) if one[i] % p)
    inv_piv = pow(one[piv], -1, ring.q)
    e = 0
    for etry in range(1, cap + 1):
        pe = p ** etry
        c = x[piv] * inv_piv % pe
        diff = ring.sub(x, ring.smul(c, one))
        if all(v % pe == 0 for v in diff):
            e = etry
        else:
            break
    return e


def _embed_orbit_reps(quad: QuadOrder, order: QuatOrder, p: int, k: int, seed: int = 0) -> list:
    """Representatives of unit-conjugacy orbits of roots of x^2 - tx + n mod p^k.

    Level-by-level Hensel lifting with orbit pruning at every level; the
    pairwise orbit test (a unit in a solvable linear module) is exact, and
    sampled-unit premerging only accelerates it.
    """
    ring = order.residue_ring(p, k)
    t, n = quad.t, quad.n
    rng = random.Random(seed)
    r1 = ring.at_precision(1)
    roots = []
    for x in itertools.product(range(p), repeat=4):
        val = r1.sub(r1.mul(x, x), r1.smul(t % p, x))
        val = r1.add(val, r1.scalar(n % p))
        if not any(val):
            roots.append(x)
    reps = _partition_orbits(ring, roots, 1, rng, None)
    for j in range(1, k):
        new_reps = []
        for x in reps:
            lifts = _lift_roots(ring, x, j, t, n)
            new_reps.extend(_partition_orbits(ring, lifts, j + 1, rng, x))
        reps = new_reps
    return reps


def _lift_roots(ring: ResidueRing, x, j: int, t: int, n: int) -> list:
    """All y mod p with f(x + p^j y) = 0 mod p^{j+1}, given f(x) = 0 mod p^j."""
    p = ring.p
    pj = p ** j
    rj1 = ring.at_precision(j + 1)
    fx = rj1.add(rj1.sub(rj1.mul(x, x), rj1.smul(t % rj1.q, x)), rj1.scalar(n % rj1.q))
    if any(v % pj for v in fx):
        return []
    consts = [(v // pj) % p for v in fx]
    cols = []
    for c in range(4):
        z = _UNIT_VECS[c]
        term = rj1.add(rj1.mul(x, z), rj1.mul(z, x))
        term = rj1.sub(term, rj1.smul(t % rj1.q, z))
        cols.append([v % p for v in term])
    sol = solve_linear_mod_p(cols, [(-v) % p for v in consts], p)
    if sol is None:
        return []
    part, kernel = sol
    out = []
    for coeffs in itertools.product(range(p), repeat=len(kernel)):
        y = list(part)
        for cf, kv in zip(coeffs, kernel):
            for tt in range(4):
                y[tt] = (y[tt] + cf * kv[tt]) % p
        out.append(tuple((x[tt] + pj * y[tt]) % rj1.q for tt in range(4)))
    return out


def _partition_orbits(ring: ResidueRing, elems: list, level: int, rng, base) -> list:
    """Orbit representatives of unit conjugation on elems at the given level.

    For level >= 2 the elems are lifts of a common base root mod p^{level-1};
    only units commuting with the base mod p^{level-1} preserve that set, so
    premerge samples come from that centralizer module.  The final pairwise
    test is exact either way.
    """
    if not elems:
        return []
    p = ring.p
    q = p ** level
    rl = ring.at_precision(level)
    elems = list(dict.fromkeys(tuple(v % q for v in e) for e in elems))
    if len(elems) == 1:
        return elems
    index = set(elems)
    parent = {e: e for e in elems}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    samples = []
    if base is None:
        samples = [rl.random_unit(rng) for _ in range(16)]
    else:
        # generators of {v : [v, base] = 0 mod p^{level-1}} viewed mod p^level
        rows = [list(rl.sub(rl.mul(e, base), rl.mul(base, e))) for e in _UNIT_VECS]
        gens = kernel_mod_prime_power(rows, p, level - 1) if level > 1 else _UNIT_VECS
        for _ in range(24):
            v = [0, 0, 0, 0]
            for g in gens:
                c = rng.randrange(q)
                for tt in range(4):
                    v[tt] = (v[tt] + c * g[tt]) % q
            if rl.is_unit(tuple(v)):
                samples.append(tuple(v))
    for e in elems:
        for u in samples:
            cand = rl.conjugate_by(u, e)
            if cand in index:
                union(e, cand)
    groups: dict = {}
    for e in elems:
        groups.setdefault(find(e), []).append(e)
    reps = [v[0] for v in groups.values()]
    merged: list = []
    for r in reps:
        if not any(_conjugate_equivalent(rl, m, r) for m in merged):
            merged.append(r)
    return merged


_EMBED_CACHE: dict = {}


def _lift_margin(quad: QuadOrder, order: QuatOrder, p: int) -> int:
    """Uniform fallback depth for root certification.

    The Newton obstruction at a root x is bounded by the valuation of the
    norm-form gradient, which contains trd(x) = t and trd(x conj(x)) = 2n.
    """
    bound = gcd(quad.t, 2 * quad.n)
    return (valuation(bound, p) if bound % p == 0 else 0) + 1


def _trace_zero_kernel(order: QuatOrder) -> list:
    """Integer basis of the trace-zero sublattice in order coordinates."""
    from .linalg import integer_kernel

    trdv = [int(b.trd()) for b in order.basis_elements()]
    return integer_kernel([[v] for v in trdv])


def _node_margin(quad: QuadOrder, order: QuatOrder, p: int, k: int, x, polar, slice_basis) -> int:
    """Per-node certification depth e(x) + 1, where e(x) is the valuation of
    the norm-form gradient at x along the trace-t slice."""
    best = None
    pk = p ** k
    for z in slice_basis:
        r = _trd_pair_int(polar, [int(v) for v in x], z) % pk
        if r == 0:
            continue
        v = valuation(r, p)
        best = v if best is None else min(best, v)
    if best is None:
        return _lift_margin(quad, order, p)
    return min(best + 1, _lift_margin(quad, order, p))


def _node_has_exact_root(ring_deep: ResidueRing, x, j: int, delta: int, t: int, n: int) -> bool:
    """Does some chain of lifts below x reach level j + delta?  DFS, exact."""
    dead: set = set()

    def extends(z, m) -> bool:
        if m >= j + delta:
            return True
        key = (m, z)
        if key in dead:
            return False
        for lift in _lift_roots(ring_deep, z, m, t, n):
            if extends(tuple(v % ring_deep.p ** (m + 1) for v in lift), m + 1):
                return True
        dead.add(key)
        return False

    return extends(tuple(v % ring_deep.p ** j for v in x), j)


_REPS_CACHE: dict = {}


def _optimal_orbit_reps(quad: QuadOrder, order: QuatOrder, p: int, k: int, seed: int = 0) -> list:
    """Orbit reps at level k of roots that are optimal and provably exact."""
    cache_key = (quad, order.lattice, p, k, seed)
    if cache_key in _REPS_CACHE:
        return _REPS_CACHE[cache_key]
    reps = _embed_orbit_reps(quad, order, p, k, seed)
    cap = min(quad.i_p(p) + 1, k - 1)
    ring = order.residue_ring(p, k)
    out = [x for x in reps if _defect(ring, x, cap) == 0]
    kept = []
    if out:
        diag, polar = _nrd_int_form(order)
        slice_basis = _trace_zero_kernel(order)
        for x in out:
            delta = _node_margin(quad, order, p, k, x, polar, slice_basis)
            ring_deep = order.residue_ring(p, k + delta)
            if _node_has_exact_root(ring_deep, x, k, delta, quad.t, quad.n):
                kept.append(x)
    _REPS_CACHE[cache_key] = kept
    return kept


def local_embed_count(quad: QuadOrder, order: QuatOrder, p: int, k: int | None = None) -> int:
    """m_p(B) = optimal roots of the minimal polynomial mod p^k, up to units.

    Recomputed at k+2; disagreement raises PrecisionUnstableError.
    """
    key = (quad, order.lattice, p)
    if key in _EMBED_CACHE:
        return _EMBED_CACHE[key]
    if k is None:
        k = precision_for(p, order, quad)
    c1 = len(_optimal_orbit_reps(quad, order, p, k))
    c2 = len(_optimal_orbit_reps(quad, order, p, k + 2))
    if c1 != c2:
        raise PrecisionUnstableError(f"m_{p}({quad}) unstable: {c1} at k={k}, {c2} at k={k + 2}")
    _EMBED_CACHE[key] = c1
    return c1


def guo_qin_test(quad: QuadOrder, n_p: int, p: int) -> bool:
    """Local embeddability into an Eichler order of level p^{n_p}, p unramified."""
    sym = quad.kronecker(p)
    if sym == 0:
        raise ValueError("the criterion requires p unramified in K")
    return sym == 1 or n_p <= 2 * quad.i_p(p)


# ---------------------------------------------------------------------------
# embedding norm groups Nr(E_p)


@dataclass(frozen=True)
class EmbeddingNormData:
    subgroup: SquareClassSubgroup
    is_full: bool
    certified: bool  # stability-certified when the lower bound was kept
    inconclusive: bool


_EMBED_NORM_CACHE: dict = {}


def embedding_norm_group(quad: QuadOrder, order: QuatOrder, p: int) -> EmbeddingNormData:
    """Nr(E_p) mod squares for the fixed optimal embedding data at p.

    Starts from the lower bound Nm(K_p^x) Nr(N(O_p)); a class outside it is
    hunted through transporters between optimal root orbits.  The subgroup
    has index <= 2, so any extra class saturates to the full group.
    """
    key = (quad, order.lattice, p)
    if key in _EMBED_NORM_CACHE:
        return _EMBED_NORM_CACHE[key]
    from .numthy import local_norm_group

    if quad.kronecker(p) == 1:
        res = EmbeddingNormData(full_square_class_group(p), True, True, False)
        _EMBED_NORM_CACHE[key] = res
        return res
    k = precision_for(p, order, quad)
    if local_embed_count(quad, order, p) == 0:
        raise ValueError("Emb(B_p, O_p) is empty; Nr(E_p) undefined")
    lower = local_norm_group(quad.m, p).join(normalizer_norms(order, p).subgroup)
    full = full_square_class_group(p)
    if lower == full:
        res = EmbeddingNormData(full, True, True, False)
        _EMBED_NORM_CACHE[key] = res
        return res
    v_max = quad.i_p(p) + (valuation(order.disc, p) if order.disc % p == 0 else 0) + 2
    verdict1 = _embedding_norm_once(quad, order, p, k, lower, v_max)
    verdict2 = _embedding_norm_once(quad, order, p, k + 2, lower, v_max)
    if verdict1[0] != verdict2[0]:
        raise PrecisionUnstableError(f"Nr(E_{p}) unstable between k={k} and k={k + 2}")
    found_extra, inconclusive = verdict1
    if found_extra:
        res = EmbeddingNormData(full, True, True, inconclusive)
    else:
        res = EmbeddingNormData(lower, False, True, inconclusive)
    _EMBED_NORM_CACHE[key] = res
    return res


def _embedding_norm_once(quad, order, p, k, lower, v_max):
    ring = order.residue_ring(p, k)
    reps = _optimal_orbit_reps(quad, order, p, k)
    x0 = reps[0]
    found_extra = False
    inconclusive = False
    for y in reps:
        # transporters u with x0*u = u*y: u = sum u_c e_c gives the row system
        rows = [list(ring.sub(ring.mul(x0, e), ring.mul(e, y))) for e in _UNIT_VECS]
        gens = kernel_mod_prime_power(rows, p, k)
        best = None
        classes = set()
        for coeffs in itertools.product(range(p), repeat=len(gens)):
            if not any(coeffs):
                continue
            g = [0, 0, 0, 0]
            for cf, gv in zip(coeffs, gens):
                for t in range(4):
                    g[t] += cf * gv[t]
            g = tuple(v % ring.q for v in g)
            n = ring.nrd(g)
            if n == 0:
                continue
            v = valuation(Fraction(n), p)
            if v > v_max or v >= k - 1:
                continue
            classes.add(square_class(Fraction(n), p))
            best = v if best is None else min(best, v)
        if best is None:
            inconclusive = True
            continue
        for cls in classes:
            if cls not in lower.members:
                found_extra = True
    return found_extra, inconclusive


# ---------------------------------------------------------------------------
# local principality certificates


def certify_locally_principal(ideal: RightIdeal, p: int):
    """An element u in I with v_p(nrd u) = v_p(Nr I), forcing I_p = u O_p.

    Enumerating I/pI is exact: polarization values of nrd lie in Nr(I)Z, so
    v_p(nrd) at valuation v_p(Nr I) is decided mod pI.
    """
    basis = ideal.lattice.basis_elements()
    target_v = valuation(ideal.nrd, p)
    idx = ideal.lattice.index_in(ideal.order.lattice)
    v_idx = valuation(idx, p) if idx != 1 else 0
    if v_idx != 2 * target_v:
        raise NotLocallyPrincipalError(
            f"index valuation {v_idx} != 2 * norm valuation {2 * target_v} at {p}"
        )
    diag = [b.nrd() for b in basis]
    polar = [[(basis[i] * basis[j].conj()).trd() for j in range(4)] for i in range(4)]
    for coeffs in itertools.product(range(p), repeat=4):
        if not any(coeffs):
            continue
        n = Fraction(0)
        for i in range(4):
            ci = coeffs[i]
            if not ci:
                continue
            n += ci * ci * diag[i]
            for j in range(i + 1, 4):
                if coeffs[j]:
                    n += ci * coeffs[j] * polar[i][j]
        if n != 0 and valuation(n, p) == target_v:
            el = ideal.order.algebra.element((0, 0, 0, 0))
            for ci, b in zip(coeffs, basis):
                el = el + ci * b
            return el
    raise NotLocallyPrincipalError(f"no local generator at {p}")


# ---------------------------------------------------------------------------
# local unit index (for mass computations)


def local_unit_index(sub: QuatOrder, sup: QuatOrder, p: int) -> Fraction:
    """[sup_p^x : sub_p^x] = C1(sup) * [sup : sub]_p / C1(sub), where C1
    counts units of ./p. and the lattice-index factor is the filtration
    correction [1 + p^k sup : 1 + p^k sub] = [sup : sub]."""
    idx = sub.lattice.index_in(sup.lattice)
    vp = valuation(idx, p)
    c_sup = _count_units_mod_p(sup, p)
    c_sub = _count_units_mod_p(sub, p)
    val = Fraction(c_sup * p ** vp, c_sub)
    return val


def _count_units_mod_p(order: QuatOrder, p: int) -> int:
    diag, polar = _nrd_int_form(order)
    return sum(1 for x in itertools.product(range(p), repeat=4) if _nrd_int(diag, polar, x) % p)

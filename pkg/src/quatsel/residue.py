"""Residue rings O/p^k of a quaternion order, given by structure constants.

This is the engine behind every local computation: Eichler invariants,
embedding counts, normalizer searches, and explicit splittings O/p^k = M_2.
Elements are 4-tuples of ints in [0, p^k); all arithmetic is exact.
"""

from __future__ import annotations

import itertools
import random

from .linalg import charpoly


class ResidueRing:
    """O/p^k for a fixed Z-basis of the order O.

    table[i][j] = coordinates of e_i * e_j in the order basis; one = the
    coordinates of 1; trdv[i] = trd(e_i); nrd_diag[i] = nrd(e_i);
    polar[i][j] = trd(e_i * conj(e_j)) for i != j.  All exact integers.
    """

    __slots__ = ("p", "k", "q", "table", "one", "trdv", "nrd_diag", "polar")

    def __init__(self, p, k, table, one, trdv, nrd_diag, polar):
        self.p = p
        self.k = k
        self.q = q = p ** k
        self.table = tuple(
            tuple(tuple(c % q for c in table[i][j]) for j in range(4)) for i in range(4)
        )
        self.one = tuple(c % q for c in one)
        self.trdv = tuple(t % q for t in trdv)
        self.nrd_diag = tuple(n % q for n in nrd_diag)
        self.polar = tuple(tuple(g % q for g in row) for row in polar)

    def at_precision(self, k2: int) -> "ResidueRing":
        return ResidueRing(self.p, k2, self.table, self.one, self.trdv, self.nrd_diag, self.polar)

    # -- arithmetic ----------------------------------------------------------

    def mul(self, x, y):
        q = self.q
        t = self.table
        a0 = a1 = a2 = a3 = 0
        for i in range(4):
            xi = x[i]
            if not xi:
                continue
            ti = t[i]
            for j in range(4):
                yj = y[j]
                if not yj:
                    continue
                c = xi * yj
                tij = ti[j]
                a0 += c * tij[0]
                a1 += c * tij[1]
                a2 += c * tij[2]
                a3 += c * tij[3]
        return (a0 % q, a1 % q, a2 % q, a3 % q)

    def add(self, x, y):
        q = self.q
        return ((x[0] + y[0]) % q, (x[1] + y[1]) % q, (x[2] + y[2]) % q, (x[3] + y[3]) % q)

    def sub(self, x, y):
        q = self.q
        return ((x[0] - y[0]) % q, (x[1] - y[1]) % q, (x[2] - y[2]) % q, (x[3] - y[3]) % q)

    def smul(self, c, x):
        q = self.q
        return (c * x[0] % q, c * x[1] % q, c * x[2] % q, c * x[3] % q)

    def scalar(self, c):
        return self.smul(c, self.one)

    def trd(self, x):
        return sum(x[i] * self.trdv[i] for i in range(4)) % self.q

    def conj(self, x):
        return self.sub(self.smul(self.trd(x), self.one), x)

    def nrd(self, x):
        acc = 0
        for i in range(4):
            xi = x[i]
            if not xi:
                continue
            acc += xi * xi * self.nrd_diag[i]
            row = self.polar[i]
            for j in range(i + 1, 4):
                if x[j]:
                    acc += xi * x[j] * row[j]
        return acc % self.q

    def is_unit(self, x) -> bool:
        return self.nrd(x) % self.p != 0

    def inv(self, x):
        n = self.nrd(x)
        if n % self.p == 0:
            raise ZeroDivisionError("not a unit")
        return self.smul(pow(n, -1, self.q), self.conj(x))

    def conjugate_by(self, u, x):
        """u x u^{-1} for a unit u."""
        return self.mul(self.mul(u, x), self.inv(u))

    def elements_mod_p(self):
        return itertools.product(range(self.p), repeat=4)

    def random_element(self, rng: random.Random):
        return tuple(rng.randrange(self.q) for _ in range(4))

    def random_unit(self, rng: random.Random):
        while True:
            x = self.random_element(rng)
            if self.is_unit(x):
                return x

    def left_mul_matrix(self, z):
        """Matrix of y -> z*y on coordinates, rows indexed by output coord."""
        cols = [self.mul(z, _unit(c)) for c in range(4)]
        return [[cols[c][r] for c in range(4)] for r in range(4)]

    def right_mul_matrix(self, z):
        cols = [self.mul(_unit(c), z) for c in range(4)]
        return [[cols[c][r] for c in range(4)] for r in range(4)]


def _unit(c):
    return tuple(1 if i == c else 0 for i in range(4))


# ---------------------------------------------------------------------------
# linear algebra mod p and mod p^k


def solve_linear_mod_p(a_cols: list, rhs: list, p: int):
    """Solve M y = rhs mod p where column j of M is a_cols[j].

    Returns (particular, kernel_basis) with vectors of length len(a_cols),
    or None if inconsistent.
    """
    m = len(rhs)
    n = len(a_cols)
    rows = [[a_cols[j][i] % p for j in range(n)] + [rhs[i] % p] for i in range(m)]
    piv_cols = []
    r = 0
    for c in range(n):
        piv = None
        for rr in range(r, m):
            if rows[rr][c] % p:
                piv = rr
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [v * inv % p for v in rows[r]]
        for rr in range(m):
            if rr != r and rows[rr][c]:
                f = rows[rr][c]
                rows[rr] = [(rows[rr][j] - f * rows[r][j]) % p for j in range(n + 1)]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    for rr in range(r, m):
        if rows[rr][n] % p:
            return None
    part = [0] * n
    for idx, c in enumerate(piv_cols):
        part[c] = rows[idx][n]
    free = [c for c in range(n) if c not in piv_cols]
    kernel = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for idx, c in enumerate(piv_cols):
            v[c] = (-rows[idx][fc]) % p
        kernel.append(v)
    return part, kernel


def invert_matrix_mod(rows: list, p: int, k: int):
    """Inverse of a square matrix mod p^k (pivots must be liftable units)."""
    q = p ** k
    n = len(rows)
    a = [[rows[i][j] % q for j in range(n)] + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = None
        for r in range(c, n):
            if a[r][c] % p:
                piv = r
                break
        if piv is None:
            raise ZeroDivisionError("matrix not invertible mod p")
        a[c], a[piv] = a[piv], a[c]
        inv = pow(a[c][c], -1, q)
        a[c] = [v * inv % q for v in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [(a[r][j] - f * a[c][j]) % q for j in range(2 * n)]
    return [row[n:] for row in a]


# ---------------------------------------------------------------------------
# Jacobson radical of O/pO


def radical_mod_p(ring: ResidueRing) -> list:
    """Basis of the Jacobson radical of A = O/pO, as coordinate vectors mod p.

    Iterated char-poly-coefficient chain, valid in every characteristic over
    the prime field (the trace-form kernel alone fails when p | dim A).
    """
    p = ring.p
    r1 = ring if ring.k == 1 else ring.at_precision(1)
    basis = [list(_unit(c)) for c in range(4)]
    steps = 0
    while p ** steps <= 4:
        steps += 1
    # steps = l + 1 where p^l <= 4 < p^(l+1)
    for s in range(steps):
        power = p ** s
        if not basis:
            return []
        cond_rows = []  # rows: one condition per y in basis; columns: basis elems
        for y in basis:
            row = []
            for b in basis:
                z = r1.mul(tuple(b), tuple(y))
                lz = r1.left_mul_matrix(z)
                cp = charpoly([[v % p for v in rw] for rw in lz])
                row.append(cp[4 - power] % p)
            cond_rows.append(row)
        # solve: x = sum c_b * b with all conditions zero
        ncols = len(basis)
        cols = [[cond_rows[i][j] for i in range(len(cond_rows))] for j in range(ncols)]
        sol = solve_linear_mod_p(cols, [0] * len(cond_rows), p)
        part, kernel = sol
        new_basis = []
        for kv in kernel:
            vec = [0, 0, 0, 0]
            for cb, b in zip(kv, basis):
                for t in range(4):
                    vec[t] = (vec[t] + cb * b[t]) % p
            if any(vec):
                new_basis.append(vec)
        basis = _echelonize_mod_p(new_basis, p)
    return basis


def _echelonize_mod_p(vecs: list, p: int) -> list:
    rows = [list(v) for v in vecs]
    out = []
    lead = {}
    for v in rows:
        v = [x % p for x in v]
        while any(v):
            piv = next(i for i, x in enumerate(v) if x)
            if piv in lead:
                f = v[piv] * pow(lead[piv][piv], -1, p) % p
                v = [(v[i] - f * lead[piv][i]) % p for i in range(4)]
            else:
                inv = pow(v[piv], -1, p)
                v = [x * inv % p for x in v]
                lead[piv] = v
                out.append(v)
                break
        else:
            continue
    return sorted(out)


def radical_brute_force(ring: ResidueRing) -> list:
    """Oracle: Rad = {x : x*y nilpotent for all y}; feasible for tiny p."""
    p = ring.p
    r1 = ring if ring.k == 1 else ring.at_precision(1)
    rad = []
    for x in r1.elements_mod_p():
        ok = True
        for y in r1.elements_mod_p():
            z = r1.mul(x, y)
            z4 = r1.mul(r1.mul(z, z), r1.mul(z, z))
            if any(z4):
                ok = False
                break
        if ok:
            rad.append(list(x))
    return _echelonize_mod_p(rad, p)


# ---------------------------------------------------------------------------
# splitting O/p^k = M_2(Z/p^k) at a prime where O is maximal split


def sqrt_mod_p(a: int, p: int):
    a %= p
    for r in range(p):
        if r * r % p == a:
            return r
    return None


def _newton_root(ring: ResidueRing, t: int, n: int, r0: int) -> int:
    """Lift a simple root r0 of X^2 - tX + n from mod p to mod p^k."""
    q = ring.q
    r = r0 % q
    for _ in range(ring.k.bit_length() + 2):
        fr = (r * r - t * r + n) % q
        if fr == 0:
            break
        d = (2 * r - t) % q
        r = (r - fr * pow(d, -1, q)) % q
    assert (r * r - t * r + n) % q == 0
    return r


def split_matrix_units(ring: ResidueRing, seed: int = 0):
    """Matrix units (E11, E12, E21, E22) of O/p^k = M_2(Z/p^k).

    Randomized zero-divisor search (expected O(1) tries).  Only valid when
    the order is maximal split at p.
    """
    p, q = ring.p, ring.q
    rng = random.Random(seed)
    for _ in range(4000):
        x = ring.random_element(rng)
        t, n = ring.trd(x), ring.nrd(x)
        if p == 2:
            if t % 2 == 0 or n % 2 != 0:
                continue
            r0 = 0 if n % 2 == 0 else 1
        else:
            disc = (t * t - 4 * n) % p
            s = sqrt_mod_p(disc, p)
            if s is None or s == 0:
                continue
            r0 = (t + s) * pow(2, -1, p) % p
        r1 = _newton_root(ring, t, n, r0)
        r2 = (t - r1) % q
        if (r1 - r2) % p == 0:
            continue
        u = pow(r1 - r2, -1, q)
        e11 = ring.smul(u, ring.sub(x, ring.scalar(r2)))
        assert ring.mul(e11, e11) == e11
        e22 = ring.sub(ring.one, e11)
        # find E12 in e11*A*e22 and E21 in e22*A*e11 with E12*E21 = E11
        cands12 = []
        cands21 = []
        for c in range(4):
            b = _unit(c)
            v12 = ring.mul(ring.mul(e11, b), e22)
            if any(vv % p for vv in v12):
                cands12.append(v12)
            v21 = ring.mul(ring.mul(e22, b), e11)
            if any(vv % p for vv in v21):
                cands21.append(v21)
        done = False
        for e12 in cands12:
            for e21c in cands21:
                prod = ring.mul(e12, e21c)
                gamma = _scalar_multiple_of(ring, prod, e11)
                if gamma is not None and gamma % p:
                    e21 = ring.smul(pow(gamma, -1, q), e21c)
                    done = True
                    break
            if done:
                break
        if not done:
            continue
        assert ring.mul(e12, e21) == e11
        assert ring.mul(e21, e12) == e22
        assert ring.add(e11, e22) == ring.one
        return e11, e12, e21, e22
    raise RuntimeError("failed to split; is the order really maximal split at p?")


def _scalar_multiple_of(ring: ResidueRing, x, y):
    """Return c with x = c*y mod p^k if one exists (y primitive), else None."""
    p, q = ring.p, ring.q
    piv = None
    for i in range(4):
        if y[i] % p:
            piv = i
            break
    if piv is None:
        return None
    c = x[piv] * pow(y[piv], -1, q) % q
    if ring.smul(c, y) == x:
        return c
    return None


def matrix_coordinate_rows(ring: ResidueRing, units) -> list:
    """Rows M with (a11,a12,a21,a22) = M . coords(x) mod p^k."""
    e11, e12, e21, e22 = units
    t_cols = [e11, e12, e21, e22]
    t = [[t_cols[c][r] for c in range(4)] for r in range(4)]
    return invert_matrix_mod(t, ring.p, ring.k)

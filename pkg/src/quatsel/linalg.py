"""Small exact integer linear algebra: HNF, kernels, char polys.

Everything here works on plain lists of Python ints.  Matrices are lists of
rows.  Sizes stay tiny (at most 8x8 or so), so clarity beats asymptotics.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) >= 0 and x*a + y*b = g."""
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        g, x, y = -g, -x, -y
    return g, x, y


def hnf_with_transform(rows: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row Hermite normal form H of the input, with unimodular U, U*A = H.

    H is in row echelon shape: pivots positive, entries above each pivot
    reduced to [0, pivot).  Zero rows sink to the bottom.
    """
    a = [list(r) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    u = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    row = 0
    for col in range(n):
        piv = None
        for r in range(row, m):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        u[row], u[piv] = u[piv], u[row]
        for r in range(row + 1, m):
            while a[r][col] != 0:
                g, x, y = xgcd(a[row][col], a[r][col])
                p, q = a[row][col] // g, a[r][col] // g
                # (row, r) <- (x*row + y*r, -q*row + p*r); determinant +-1
                new_top = [x * a[row][j] + y * a[r][j] for j in range(n)]
                new_bot = [-q * a[row][j] + p * a[r][j] for j in range(n)]
                a[row], a[r] = new_top, new_bot
                new_top_u = [x * u[row][j] + y * u[r][j] for j in range(m)]
                new_bot_u = [-q * u[row][j] + p * u[r][j] for j in range(m)]
                u[row], u[r] = new_top_u, new_bot_u
        if a[row][col] < 0:
            a[row] = [-v for v in a[row]]
            u[row] = [-v for v in u[row]]
        for r in range(row):
            q = a[r][col] // a[row][col]
            if q:
                a[r] = [a[r][j] - q * a[row][j] for j in range(n)]
                u[r] = [u[r][j] - q * u[row][j] for j in range(m)]
        row += 1
        if row == m:
            break
    return a, u


def hnf(rows: list[list[int]]) -> list[list[int]]:
    """Nonzero rows of the row HNF."""
    h, _ = hnf_with_transform(rows)
    return [r for r in h if any(r)]


def integer_kernel(rows: list[list[int]]) -> list[list[int]]:
    """Basis of {x : x*A = 0} (left kernel) for the row matrix A."""
    h, u = hnf_with_transform(rows)
    return [u[i] for i in range(len(h)) if not any(h[i])]


def kernel_mod_prime_power(a_rows: list[list[int]], p: int, k: int) -> list[list[int]]:
    """Generators of {x in Z^m : x*A = 0 mod p^k}, A given as m rows.

    The returned integer vectors generate the full preimage lattice in Z^m
    (which contains p^k Z^m); callers usually reduce them mod p^k.
    """
    q = p ** k
    m = len(a_rows)
    n = len(a_rows[0]) if a_rows else 0
    stacked = [list(r) for r in a_rows] + [[q if j == i else 0 for j in range(n)] for i in range(n)]
    ker = integer_kernel(stacked)
    sols = [v[:m] for v in ker]
    # p^k * e_i is always a solution; make sure the lattice is full rank
    for i in range(m):
        sols.append([q if j == i else 0 for j in range(m)])
    return [r for r in hnf(sols)]


def solve_row_mod(m_rows: list[list[int]], y: list[int], modulus: int):
    """One x (row vector over Z) with x * M = y mod modulus, or None.

    Solves over the lattice spanned by the rows of M and modulus * I via HNF
    with transform, so it is exact for any modulus.
    """
    m = len(m_rows)
    n = len(m_rows[0])
    stacked = [list(r) for r in m_rows] + [[modulus if j == i else 0 for j in range(n)] for i in range(n)]
    h, u = hnf_with_transform(stacked)
    # back-substitute c * H = y using the echelon structure of H
    c = [0] * len(h)
    rem = list(y)
    for i, row in enumerate(h):
        piv = next((j for j, v in enumerate(row) if v), None)
        if piv is None:
            break
        if rem[piv] % row[piv]:
            return None
        q = rem[piv] // row[piv]
        if q:
            rem = [rem[j] - q * row[j] for j in range(n)]
        c[i] = q
    if any(rem):
        return None
    x_full = [0] * (m + n)
    for i, ci in enumerate(c):
        if ci:
            for j in range(m + n):
                x_full[j] += ci * u[i][j]
    return [v % modulus for v in x_full[:m]]


def det_int(rows: list[list[int]]) -> int:
    """Determinant of a square integer matrix (Bareiss, fraction free)."""
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for i in range(n - 1):
        if a[i][i] == 0:
            for r in range(i + 1, n):
                if a[r][i] != 0:
                    a[i], a[r] = a[r], a[i]
                    sign = -sign
                    break
            else:
                return 0
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                a[r][c] = (a[r][c] * a[i][i] - a[r][i] * a[i][c]) // prev
            a[r][i] = 0
        prev = a[i][i]
    return sign * a[n - 1][n - 1]


def det_fraction(rows) -> Fraction:
    """Determinant of a square matrix of Fractions/ints."""
    scale = Fraction(1)
    scaled = []
    for r in rows:
        d = 1
        for v in r:
            dv = Fraction(v).denominator
            d = d * dv // gcd(d, dv)
        scaled.append([int(Fraction(v) * d) for v in r])
        scale /= d
    return scale * det_int(scaled)


def charpoly(rows: list[list[int]]) -> list[int]:
    """Coefficients [c_0, ..., c_n] of det(lambda*I - A), lowest degree first.

    Faddeev-LeVerrier; all divisions are exact over Z.
    """
    n = len(rows)
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    m_prev = [[0] * n for _ in range(n)]
    c_prev = 1  # c_n
    for k in range(1, n + 1):
        # M_k = A*M_{k-1} + c_{n-k+1} * I
        m_k = matmul(rows, m_prev)
        for i in range(n):
            m_k[i][i] += c_prev
        am = matmul(rows, m_k)
        c = -sum(am[i][i] for i in range(n)) // k
        coeffs[n - k] = c
        m_prev, c_prev = m_k, c
    return coeffs


def matmul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    n, kk = len(a), len(b)
    m = len(b[0]) if b else 0
    return [[sum(a[i][t] * b[t][j] for t in range(kk)) for j in range(m)] for i in range(n)]

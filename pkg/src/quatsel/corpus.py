"""Order corpus files: one order per line, whitespace-delimited.

Record layout (20 or 21 tokens):

    a b  n00 n01 n02 n03  n10 ... n33  den  [label]

a, b are the algebra parameters (integers or fractions like -1/2), the n__
are the 16 numerators of the basis matrix rows over the standard basis
1, i, j, k, den is the common positive denominator, and the optional final
token is a label.  Lines starting with # and blank lines are ignored.
"""

from __future__ import annotations

from fractions import Fraction

from .quat import QuatLattice, QuatOrder, RatQuatAlgebra, order_closure_check


def parse_corpus(text: str) -> list[tuple[str, QuatOrder]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (19, 20):
            raise ValueError(f"line {lineno}: expected 19 or 20 fields, got {len(tokens)}")
        a, b = Fraction(tokens[0]), Fraction(tokens[1])
        nums = [int(t) for t in tokens[2:18]]
        den = int(tokens[18])
        label = tokens[19] if len(tokens) == 20 else f"order{lineno}"
        alg = RatQuatAlgebra(a, b)
        rows = [[Fraction(nums[4 * r + c], den) for c in range(4)] for r in range(4)]
        order = order_closure_check(QuatLattice.from_rows(alg, rows))
        out.append((label, order))
    return out


def format_order(order: QuatOrder, label: str | None = None) -> str:
    alg = order.algebra
    toks = [str(alg.a), str(alg.b)]
    for row in order.lattice.mat:
        toks.extend(str(v) for v in row)
    toks.append(str(order.lattice.den))
    if label:
        toks.append(label)
    return " ".join(toks)


def load_corpus_file(path: str) -> list[tuple[str, QuatOrder]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh.read())


def write_corpus_file(path: str, orders: list[tuple[str, QuatOrder]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# quatsel order corpus: a b n00..n33 den label\n")
        for label, order in orders:
            fh.write(format_order(order, label) + "\n")

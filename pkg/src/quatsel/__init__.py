"""quatsel: exact quaternion-order arithmetic over Q.

Local invariants of quaternion orders, spinor genus fields, optimal spinor
selectivity tests, Maclachlan's relative-conductor formula, and exhaustive
verification of the trace and spinor trace formulas in totally definite
algebras.  All arithmetic is exact (ints and Fractions); no floating point
touches any verification path.
"""

from .numthy import INF, QuadOrder, hilbert_symbol, kronecker_symbol, local_norm_group, quad_class_number
from .quat import (
    QuatLattice,
    QuatOrder,
    RatQuatAlgebra,
    RightIdeal,
    definite_algebra_with_disc,
    eichler_order,
    make_algebra,
    maximal_order,
    order_closure_check,
)

__all__ = [
    "INF",
    "QuadOrder",
    "QuatLattice",
    "QuatOrder",
    "RatQuatAlgebra",
    "RightIdeal",
    "definite_algebra_with_disc",
    "eichler_order",
    "hilbert_symbol",
    "kronecker_symbol",
    "local_norm_group",
    "make_algebra",
    "maximal_order",
    "order_closure_check",
    "quad_class_number",
]

"""Built-in algebras: standard small algebras and the worked examples.

Vector-coded universes are frozen as mixed-radix encodings (first coordinate
most significant), e.g. Z2^3 uses (a,b,c) -> 4a+2b+c.  All index-level
assertions elsewhere depend on these encodings, so they must not change.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .core import AlgebraError, FiniteAlgebra

F1 = np.array([[1, 0, 0], [0, 1, 0], [1, 0, 0]])
F2 = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
G = np.array([[1, 0, 0], [1, 1, 0], [0, 0, 1]])

P = np.array([[1, 0], [0, 0]])
N = np.array([[0, 0], [1, 0]])


def _enc(vec) -> int:
    out = 0
    for x in vec:
        out = 2 * out + int(x) % 2
    return out


def _vecs(dim):
    return [np.array(v) for v in product((0, 1), repeat=dim)]


def _z2_vector_algebra(name, dim, ops):
    """Algebra on Z2^dim from callables on coordinate vectors."""
    vecs = _vecs(dim)
    size = len(vecs)
    tables = []
    for sym, arity, fn in ops:
        table = []
        for args in product(vecs, repeat=arity):
            table.append(_enc(fn(*args)))
        tables.append((sym, arity, table))
    names = ["(" + ",".join(str(int(x)) for x in v) + ")" for v in vecs]
    return FiniteAlgebra(name, size, tables, element_names=names)


def z2_group() -> FiniteAlgebra:
    return FiniteAlgebra("z2_group", 2, [("+", 2, [0, 1, 1, 0])])


def z3_group() -> FiniteAlgebra:
    table = [(a + b) % 3 for a in range(3) for b in range(3)]
    return FiniteAlgebra("z3_group", 3, [("+", 2, table)])


def z4_group() -> FiniteAlgebra:
    table = [(a + b) % 4 for a in range(4) for b in range(4)]
    return FiniteAlgebra("z4_group", 4, [("+", 2, table)])


def two_element_lattice() -> FiniteAlgebra:
    return FiniteAlgebra(
        "two_element_lattice",
        2,
        [("meet", 2, [0, 0, 0, 1]), ("join", 2, [0, 1, 1, 1])],
    )


def two_element_boolean() -> FiniteAlgebra:
    return FiniteAlgebra(
        "two_element_boolean",
        2,
        [
            ("meet", 2, [0, 0, 0, 1]),
            ("join", 2, [0, 1, 1, 1]),
            ("not", 1, [1, 0]),
            ("zero", 0, [0]),
            ("one", 0, [1]),
        ],
    )


def two_element_bare_set() -> FiniteAlgebra:
    return FiniteAlgebra("two_element_bare_set", 2, [])


def example_A() -> FiniteAlgebra:
    """Z2^3 with u*v = F1 u + F2 v and g(v) = G v + (1,0,0)."""
    e1 = np.array([1, 0, 0])
    return _z2_vector_algebra(
        "example_A",
        3,
        [
            ("*", 2, lambda u, v: (F1 @ u + F2 @ v) % 2),
            ("g", 1, lambda v: (G @ v + e1) % 2),
        ],
    )


def example_A_bar() -> FiniteAlgebra:
    """example_A with the transposition h swapping (1,0,0) and (1,0,1)."""
    base = example_A()
    h = list(range(8))
    a, b = _enc((1, 0, 0)), _enc((1, 0, 1))
    h[a], h[b] = b, a
    ops = [(op.symbol, op.arity, op.table) for op in base.operations]
    ops.append(("h", 1, h))
    return FiniteAlgebra("example_A_bar", 8, ops, element_names=base.element_names)


def _bc_ops(side: str):
    zero = np.zeros(2, dtype=int)
    if side == "B":
        plus = lambda x, y: (x + y) % 2
        oplus = lambda x, y: zero
        g = lambda x, y, u, v: (P @ x + N @ y) % 2
    else:
        plus = lambda x, y: zero
        oplus = lambda x, y: (x + y) % 2
        g = lambda x, y, u, v: (P @ u + N @ v) % 2
    return [
        ("+", 2, plus),
        ("(+)", 2, oplus),
        ("g", 4, g),
        ("zero", 0, lambda: zero),
    ]


def example_B() -> FiniteAlgebra:
    return _z2_vector_algebra("example_B", 2, _bc_ops("B"))


def example_C() -> FiniteAlgebra:
    return _z2_vector_algebra("example_C", 2, _bc_ops("C"))


def example_BxC() -> FiniteAlgebra:
    """Direct product of example_B and example_C, pair (b,c) -> 4b + c."""
    b, c = example_B(), example_C()
    size = b.size * c.size
    ops = []
    for ob, oc in zip(b.operations, c.operations):
        assert ob.symbol == oc.symbol and ob.arity == oc.arity
        k = ob.arity
        table = []
        for args in product(range(size), repeat=k):
            bargs = tuple(a // c.size for a in args)
            cargs = tuple(a % c.size for a in args)
            bi, ci = 0, 0
            for x in bargs:
                bi = bi * b.size + x
            for x in cargs:
                ci = ci * c.size + x
            bval = int(ob.table[bi]) if k else int(ob.table[0])
            cval = int(oc.table[ci]) if k else int(oc.table[0])
            table.append(bval * c.size + cval)
        ops.append((ob.symbol, k, table))
    names = [
        f"({b.element_names[i // c.size]},{c.element_names[i % c.size]})"
        for i in range(size)
    ]
    return FiniteAlgebra("example_BxC", size, ops, element_names=names)


_BUILDERS = {
    "z2_group": z2_group,
    "z3_group": z3_group,
    "z4_group": z4_group,
    "two_element_lattice": two_element_lattice,
    "two_element_boolean": two_element_boolean,
    "two_element_bare_set": two_element_bare_set,
    "example_A": example_A,
    "example_A_bar": example_A_bar,
    "example_B": example_B,
    "example_C": example_C,
    "example_BxC": example_BxC,
}


def catalog_names() -> list[str]:
    return sorted(_BUILDERS)


def builtin(name: str) -> FiniteAlgebra:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise AlgebraError(
            f"unknown builtin {name!r}; available: {', '.join(catalog_names())}"
        ) from None
    return builder()

"""Finite algebras as operation tables, with powers, quotients and closure.

Every algebra lives on the universe {0, ..., size-1}.  Operation tables are
flat integer arrays of length size**arity in row-major order with the LAST
argument varying fastest, so ``table.reshape((size,)*arity)[a1, ..., ak]``
is the value at (a1, ..., ak).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

# Refuse to materialize universes/tables above these caps; higher-level
# searches must take explicit budgets instead of failing open.
DEFAULT_UNIVERSE_CAP = 2**20
DEFAULT_TABLE_CAP = 2**24


class AlgebraError(ValueError):
    """Malformed algebra, operation or term."""


class BudgetExceededError(RuntimeError):
    """A size cap or search budget was exhausted; never a silent truncation."""


@dataclass(frozen=True)
class ClosureBudget:
    """Limits for closure searches: element count, round count, wall seconds."""

    max_elements: int = 2_000_000
    max_rounds: int = 200
    max_seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_elements <= 0 or self.max_rounds <= 0:
            raise ValueError("budget limits must be positive")


DEFAULT_BUDGET = ClosureBudget()


class TupleCodec:
    """Mixed-radix codec between tuples in base**width and flat indices.

    The last coordinate varies fastest, matching the operation-table layout.
    """

    def __init__(self, base: int, width: int):
        if base <= 0 or width <= 0:
            raise ValueError("base and width must be positive")
        self.base = base
        self.width = width
        self.size = base**width

    def encode(self, tup: Sequence[int]) -> int:
        assert len(tup) == self.width
        idx = 0
        for t in tup:
            assert 0 <= t < self.base
            idx = idx * self.base + t
        return idx

    def decode(self, idx: int) -> tuple[int, ...]:
        assert 0 <= idx < self.size
        out = []
        for _ in range(self.width):
            idx, r = divmod(idx, self.base)
            out.append(r)
        return tuple(reversed(out))

    def decode_array(self, indices: np.ndarray) -> np.ndarray:
        """Decode a vector of indices to an (n, width) coordinate matrix."""
        indices = np.asarray(indices, dtype=np.int64)
        coords = np.empty((len(indices), self.width), dtype=np.int64)
        rest = indices.copy()
        for j in range(self.width - 1, -1, -1):
            coords[:, j] = rest % self.base
            rest //= self.base
        return coords

    def encode_array(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        idx = np.zeros(coords.shape[0], dtype=np.int64)
        for j in range(self.width):
            idx = idx * self.base + coords[:, j]
        return idx


@dataclass(frozen=True)
class Operation:
    symbol: str
    arity: int
    table: np.ndarray  # flat, length size**arity, read-only

    def tensor(self, size: int) -> np.ndarray:
        return self.table.reshape((size,) * self.arity)


class FiniteAlgebra:
    """A finite algebra: a universe size and a list of operation tables."""

    def __init__(
        self,
        name: str,
        size: int,
        operations: Sequence[tuple[str, int, Sequence[int]]] | Sequence[Operation],
        element_names: Optional[Sequence[str]] = None,
    ):
        if size <= 0:
            raise AlgebraError(f"size must be positive, got {size}")
        self.name = name
        self.size = size
        ops: list[Operation] = []
        seen: set[str] = set()
        for entry in operations:
            if isinstance(entry, Operation):
                sym, arity, table = entry.symbol, entry.arity, entry.table
            else:
                sym, arity, table = entry
            if sym in seen:
                raise AlgebraError(f"duplicate operation symbol {sym!r}")
            seen.add(sym)
            if arity < 0:
                raise AlgebraError(f"operation {sym!r} has negative arity")
            arr = np.asarray(table, dtype=np.int64).ravel()
            if arr.size != size**arity:
                raise AlgebraError(
                    f"operation {sym!r}: table length {arr.size}, expected {size**arity}"
                )
            if arr.size and (arr.min() < 0 or arr.max() >= size):
                bad = int(np.argmax((arr < 0) | (arr >= size)))
                raise AlgebraError(
                    f"operation {sym!r}: entry {arr[bad]} at index {bad} out of range"
                )
            arr.setflags(write=False)
            ops.append(Operation(sym, arity, arr))
        self.operations = tuple(ops)
        self._by_symbol = {op.symbol: op for op in self.operations}
        if element_names is not None:
            if len(element_names) != size:
                raise AlgebraError("element_names must match size")
            self.element_names = tuple(element_names)
        else:
            self.element_names = None

    def operation(self, symbol: str) -> Operation:
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise AlgebraError(
                f"unknown operation {symbol!r}; have {sorted(self._by_symbol)}"
            ) from None

    def apply(self, symbol: str, *args: int) -> int:
        op = self.operation(symbol)
        assert len(args) == op.arity
        idx = 0
        for a in args:
            idx = idx * self.size + a
        return int(op.table[idx])

    def max_arity(self) -> int:
        return max((op.arity for op in self.operations), default=0)

    def elements(self) -> range:
        return range(self.size)

    def element_label(self, e: int) -> str:
        if self.element_names is not None:
            return self.element_names[e]
        return str(e)

    def __repr__(self):
        sig = ", ".join(f"{op.symbol}/{op.arity}" for op in self.operations)
        return f"FiniteAlgebra({self.name!r}, size={self.size}, ops=[{sig}])"


# ---------------------------------------------------------------------------
# Terms


class TermExpression:
    """A term tree over an algebra's operation symbols, with constants."""

    def variables(self) -> set[int]:
        raise NotImplementedError


@dataclass(frozen=True)
class Var(TermExpression):
    index: int

    def variables(self):
        return {self.index}

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Const(TermExpression):
    element: int

    def variables(self):
        return set()

    def __str__(self):
        return f"c{self.element}"


@dataclass(frozen=True)
class App(TermExpression):
    symbol: str
    children: tuple[TermExpression, ...]

    def variables(self):
        out: set[int] = set()
        for c in self.children:
            out |= c.variables()
        return out

    def __str__(self):
        return f"{self.symbol}({', '.join(str(c) for c in self.children)})"


def eval_term(alg: FiniteAlgebra, term: TermExpression, env: dict[int, int]) -> int:
    """Evaluate a term bottom-up against the operation tables."""
    if isinstance(term, Var):
        if term.index not in env:
            raise AlgebraError(f"missing binding for variable x{term.index}")
        return env[term.index]
    if isinstance(term, Const):
        if not 0 <= term.element < alg.size:
            raise AlgebraError(f"constant {term.element} out of range")
        return term.element
    if isinstance(term, App):
        op = alg.operation(term.symbol)
        if len(term.children) != op.arity:
            raise AlgebraError(
                f"operation {term.symbol!r} expects {op.arity} arguments, "
                f"got {len(term.children)}"
            )
        args = [eval_term(alg, c, env) for c in term.children]
        return alg.apply(term.symbol, *args)
    raise AlgebraError(f"not a term: {term!r}")


def eval_term_vector(
    alg: FiniteAlgebra, term: TermExpression, env: dict[int, np.ndarray], length: int
) -> np.ndarray:
    """Evaluate a term pointwise over vectors of elements (one env per point)."""
    if isinstance(term, Var):
        return env[term.index]
    if isinstance(term, Const):
        return np.full(length, term.element, dtype=np.int64)
    assert isinstance(term, App)
    op = alg.operation(term.symbol)
    if op.arity == 0:
        return np.full(length, int(op.table[0]), dtype=np.int64)
    args = [eval_term_vector(alg, c, env, length) for c in term.children]
    idx = args[0].astype(np.int64)
    for a in args[1:]:
        idx = idx * alg.size + a
    return op.table[idx]


def table_of_term(alg: FiniteAlgebra, term: TermExpression, arity: int) -> np.ndarray:
    """Full table of an m-ary term operation, codec order."""
    codec = TupleCodec(alg.size, arity) if arity else None
    n = alg.size**arity
    if arity == 0:
        return np.array([eval_term(alg, term, {})], dtype=np.int64)
    coords = codec.decode_array(np.arange(n))
    env = {j: coords[:, j] for j in range(arity)}
    return eval_term_vector(alg, term, env, n)


# ---------------------------------------------------------------------------
# Constructions


def direct_power(
    alg: FiniteAlgebra,
    n: int,
    universe_cap: int = DEFAULT_UNIVERSE_CAP,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> FiniteAlgebra:
    """The n-th direct power, universe coded by TupleCodec(size, n)."""
    if n <= 0:
        raise AlgebraError("power exponent must be positive")
    psize = alg.size**n
    if psize > universe_cap:
        raise BudgetExceededError(
            f"direct power universe {alg.size}^{n} = {psize} exceeds cap {universe_cap}"
        )
    ops = []
    for op in alg.operations:
        entries = psize**op.arity
        if entries > table_cap:
            raise BudgetExceededError(
                f"table for {op.symbol!r} on power would need {entries} entries "
                f"(cap {table_cap})"
            )
        if op.arity == 0:
            val = int(op.table[0])
            tup = [val] * n
            enc = 0
            for t in tup:
                enc = enc * alg.size + t
            ops.append((op.symbol, 0, [enc]))
            continue
        codec = TupleCodec(psize, op.arity)
        pcodec = TupleCodec(alg.size, n)
        args = codec.decode_array(np.arange(entries))  # (entries, arity) power elems
        coords = np.stack(
            [pcodec.decode_array(args[:, j]) for j in range(op.arity)], axis=2
        )  # (entries, n, arity)
        idx = coords[:, :, 0].astype(np.int64)
        for j in range(1, op.arity):
            idx = idx * alg.size + coords[:, :, j]
        vals = op.table[idx]  # (entries, n) per-coordinate results
        ops.append((op.symbol, op.arity, pcodec.encode_array(vals)))
    return FiniteAlgebra(f"{alg.name}^{n}", psize, ops)


def quotient(
    alg: FiniteAlgebra, partition: Sequence[int]
) -> tuple[FiniteAlgebra, np.ndarray]:
    """Quotient modulo a congruence given as a class-id-per-element array.

    Classes are canonically indexed by their least member.  Returns the
    quotient algebra and the projection map.  Raises if the partition is not
    compatible with some operation, naming the operation and a violating tuple.
    """
    part = np.asarray(partition, dtype=np.int64)
    if part.shape != (alg.size,):
        raise AlgebraError("partition length must equal algebra size")
    reps = sorted(set(int(x) for x in part))
    rep_index = {r: i for i, r in enumerate(reps)}
    for e in range(alg.size):
        if part[part[e]] != part[e]:
            raise AlgebraError("partition class ids must be least members")
    proj = np.array([rep_index[int(part[e])] for e in range(alg.size)], dtype=np.int64)
    qsize = len(reps)
    ops = []
    for op in alg.operations:
        if op.arity == 0:
            ops.append((op.symbol, 0, [int(proj[op.table[0]])]))
            continue
        qtable = np.empty(qsize**op.arity, dtype=np.int64)
        tensor = op.tensor(alg.size)
        for pos, args in enumerate(product(reps, repeat=op.arity)):
            qtable[pos] = proj[tensor[args]]
        # well-definedness: every tuple of whole classes must land in one class
        full = op.table if op.arity else op.table
        codec = TupleCodec(alg.size, op.arity)
        coords = codec.decode_array(np.arange(alg.size**op.arity))
        rep_coords = part[coords]
        ridx = rep_coords[:, 0].astype(np.int64)
        for j in range(1, op.arity):
            ridx = ridx * alg.size + rep_coords[:, j]
        expected = proj[op.table[ridx]]
        got = proj[full]
        if not np.array_equal(expected, got):
            bad = int(np.argmax(expected != got))
            raise AlgebraError(
                f"partition not compatible with operation {op.symbol!r} "
                f"at arguments {tuple(int(c) for c in coords[bad])}"
            )
        ops.append((op.symbol, op.arity, qtable))
    return FiniteAlgebra(f"{alg.name}/~", qsize, ops), proj


def constant_expansion(alg: FiniteAlgebra) -> FiniteAlgebra:
    """Adjoin one nullary operation per element; original operations kept."""
    ops: list[tuple[str, int, Sequence[int]]] = [
        (op.symbol, op.arity, op.table) for op in alg.operations
    ]
    for e in range(alg.size):
        sym = f"const_{e}"
        while sym in {s for s, _, _ in ops}:
            sym = "_" + sym
        ops.append((sym, 0, [e]))
    return FiniteAlgebra(f"{alg.name}+consts", alg.size, ops)


def generate_subuniverse(
    alg: FiniteAlgebra,
    generators: Iterable[int],
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> list[int]:
    """Least subset containing the generators and closed under all operations.

    Nullary operations seed the closure, so the empty generating set closes
    to the set of values of constant terms (empty when there are none).
    Result is sorted; deterministic.
    """
    member = np.zeros(alg.size, dtype=bool)
    for g in generators:
        if not 0 <= g < alg.size:
            raise AlgebraError(f"generator {g} out of range")
        member[g] = True
    for op in alg.operations:
        if op.arity == 0:
            member[int(op.table[0])] = True
    current = np.flatnonzero(member)
    for _ in range(budget.max_rounds):
        grew = False
        for op in alg.operations:
            if op.arity == 0 or len(current) == 0:
                continue
            tensor = op.tensor(alg.size)
            vals = tensor[np.ix_(*([current] * op.arity))].ravel()
            fresh = vals[~member[vals]]
            if fresh.size:
                member[fresh] = True
                grew = True
        if not grew:
            return [int(x) for x in np.flatnonzero(member)]
        current = np.flatnonzero(member)
        if len(current) > budget.max_elements:
            raise BudgetExceededError("subuniverse closure exceeded element budget")
    raise BudgetExceededError("subuniverse closure exceeded round budget")


def generates_fully(
    alg: FiniteAlgebra, generators: Iterable[int], budget: ClosureBudget = DEFAULT_BUDGET
) -> bool:
    return len(generate_subuniverse(alg, generators, budget)) == alg.size


def log_lower_bound(size: int, n: int) -> int:
    """ceil(log_size(n)), the generating-set lower bound for size > 1."""
    if size <= 1:
        return 0
    k = 0
    while size**k < n:
        k += 1
    return k

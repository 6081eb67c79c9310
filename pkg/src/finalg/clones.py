"""Polynomial clones, interpolation closures and induced algebras.

A polynomial of an algebra is a term of its constant expansion.  All
searches here run through the vector-closure kernel: the closure of the
projections and constant maps, restricted to whatever point domain is in
play, is exactly the set of restrictions of all polynomials to that domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .closure import VectorClosure
from .core import (
    App,
    AlgebraError,
    BudgetExceededError,
    ClosureBudget,
    Const,
    DEFAULT_BUDGET,
    DEFAULT_UNIVERSE_CAP,
    FiniteAlgebra,
    TermExpression,
    TupleCodec,
    Var,
    table_of_term,
)


@dataclass
class WitnessedOperation:
    """A finitary function on the universe plus a term-with-constants witness.

    Witnesses record the first derivation found, not a minimal one; they
    exist for verification, not optimality.
    """

    arity: int
    table: np.ndarray  # flat over size**arity, codec order
    witness: TermExpression

    def tensor(self, size: int) -> np.ndarray:
        return self.table.reshape((size,) * self.arity)

    def key(self) -> bytes:
        return self.table.astype(np.int64).tobytes()

    def is_idempotent_map(self) -> bool:
        """For unary f: f(f(x)) = f(x)."""
        assert self.arity == 1
        return bool(np.array_equal(self.table[self.table], self.table))


@dataclass
class RestrictedOperation:
    """An operation of an induced algebra A|_U, tabulated over U**arity.

    ``universe`` lists U as elements of the ambient algebra; ``values`` is
    indexed by tuples over U (codec order over positions of U) and takes
    values inside U.
    """

    universe: tuple[int, ...]
    arity: int
    values: np.ndarray
    witness: TermExpression

    def key(self) -> bytes:
        return self.values.astype(np.int64).tobytes()

    def evaluate(self, args: Sequence[int]) -> int:
        idx = 0
        pos = {u: i for i, u in enumerate(self.universe)}
        for a in args:
            idx = idx * len(self.universe) + pos[a]
        return int(self.values[idx])


@dataclass
class PartialDomain:
    """Distinct tuples in A^m, optionally with one required value each."""

    points: list[tuple[int, ...]]
    targets: Optional[list[int]] = None

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise AlgebraError("interpolation points must be pairwise distinct")
        if self.targets is not None and len(self.targets) != len(self.points):
            raise AlgebraError("one target per point required")
        widths = {len(p) for p in self.points}
        if len(widths) > 1:
            raise AlgebraError("points must share an arity")


@dataclass
class CloneResult:
    operations: list  # WitnessedOperation or RestrictedOperation
    complete: bool


@dataclass
class InterpolationResult:
    status: str  # "found" | "absent" | "unknown"
    operation: Optional[WitnessedOperation] = None

    @property
    def found(self) -> bool:
        return self.status == "found"


def substitute(term: TermExpression, mapping: dict[int, TermExpression]) -> TermExpression:
    if isinstance(term, Var):
        return mapping.get(term.index, term)
    if isinstance(term, Const):
        return term
    assert isinstance(term, App)
    return App(term.symbol, tuple(substitute(c, mapping) for c in term.children))


def _full_domain_closure(
    alg: FiniteAlgebra, m: int, budget: ClosureBudget, with_constants: bool = True
) -> VectorClosure:
    npoints = alg.size**m
    codec = TupleCodec(alg.size, m)
    coords = codec.decode_array(np.arange(npoints))
    vc = VectorClosure(alg, npoints, budget)
    for j in range(m):
        vc.add_projection(coords[:, j], j)
    if with_constants:
        for c in range(alg.size):
            vc.add_constant(c)
    return vc


def unary_polynomial_clone(
    alg: FiniteAlgebra, budget: ClosureBudget = DEFAULT_BUDGET
) -> CloneResult:
    """All unary polynomials: closure of the identity and the constant maps."""
    vc = _full_domain_closure(alg, 1, budget)
    report = vc.close()
    ops = [
        WitnessedOperation(1, vc.vector(i).astype(np.int64), vc.term_of(i))
        for i in range(len(vc))
    ]
    ops.sort(key=lambda w: w.key())
    return CloneResult(ops, report.complete)


def bounded_polynomial_clone(
    alg: FiniteAlgebra,
    m: int,
    budget: ClosureBudget = DEFAULT_BUDGET,
    universe_cap: int = DEFAULT_UNIVERSE_CAP,
) -> CloneResult:
    """All m-ary polynomials, complete iff the budget was not exhausted."""
    if m < 1:
        raise AlgebraError("arity must be at least 1")
    if alg.size**m > universe_cap:
        raise BudgetExceededError(f"domain {alg.size}^{m} exceeds cap")
    vc = _full_domain_closure(alg, m, budget)
    report = vc.close()
    ops = [
        WitnessedOperation(m, vc.vector(i).astype(np.int64), vc.term_of(i))
        for i in range(len(vc))
    ]
    ops.sort(key=lambda w: w.key())
    return CloneResult(ops, report.complete)


def idempotent_power(f: WitnessedOperation) -> WitnessedOperation:
    """Some power f^k with f^k o f^k = f^k (exists for every unary map)."""
    assert f.arity == 1
    size = len(f.table)
    table = f.table.astype(np.int64)
    witness = f.witness
    power = table
    pterm = witness
    for _ in range(2 * size * size):
        if np.array_equal(power[power], power):
            return WitnessedOperation(1, power, pterm)
        power = table[power]
        pterm = substitute(witness, {0: pterm})
    raise AssertionError("unary map has no idempotent power; unreachable")


def interpolation_closure(
    alg: FiniteAlgebra,
    domain: PartialDomain,
    allow_constants: bool = True,
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> InterpolationResult:
    """Search for a polynomial (term if constants are disallowed) matching the
    required values on the domain points.

    "found" is always sound; "absent" is sound because the closure finished;
    a budget exhaustion yields "unknown".
    """
    if domain.targets is None:
        raise AlgebraError("interpolation requires targets")
    m = len(domain.points[0]) if domain.points else 0
    if m == 0:
        raise AlgebraError("empty domain")
    vc = VectorClosure(alg, len(domain.points), budget)
    pts = np.array(domain.points, dtype=np.int64)
    for j in range(m):
        vc.add_projection(pts[:, j], j)
    if allow_constants:
        for c in range(alg.size):
            vc.add_constant(c)
    target = np.asarray(domain.targets, dtype=np.int64).astype(vc.dtype)
    tbytes = target.tobytes()

    def hit(vec, _idx):
        return vec.tobytes() == tbytes

    report = vc.close(stop=hit)
    if report.hit is not None:
        term = vc.term_of(report.hit)
        table = table_of_term(alg, term, m)
        return InterpolationResult("found", WitnessedOperation(m, table, term))
    existing = vc.find(target)
    if existing is not None:
        term = vc.term_of(existing)
        table = table_of_term(alg, term, m)
        return InterpolationResult("found", WitnessedOperation(m, table, term))
    if report.complete:
        return InterpolationResult("absent")
    return InterpolationResult("unknown")


def restricted_polynomial_closure(
    alg: FiniteAlgebra,
    points: Sequence[tuple[int, ...]],
    budget: ClosureBudget = DEFAULT_BUDGET,
    with_constants: bool = True,
):
    """Closure of projections and constants restricted to given points: the
    restrictions to those points of all polynomials of matching arity."""
    m = len(points[0])
    vc = VectorClosure(alg, len(points), budget)
    pts = np.array(points, dtype=np.int64)
    for j in range(m):
        vc.add_projection(pts[:, j], j)
    if with_constants:
        for c in range(alg.size):
            vc.add_constant(c)
    report = vc.close()
    return vc, report


def induced_polynomials(
    alg: FiniteAlgebra,
    e: WitnessedOperation,
    m: int,
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> CloneResult:
    """The m-ary polynomials of the induced algebra A|_U for U = e(A).

    For a neighborhood U these are exactly the maps e o p restricted to U^m
    with p an m-ary polynomial of A; non-idempotent e is rejected.
    """
    assert e.arity == 1
    if not e.is_idempotent_map():
        raise AlgebraError("induced algebras require an idempotent range map")
    universe = tuple(sorted(set(int(x) for x in e.table)))
    points = list(product(universe, repeat=m))
    vc, report = restricted_polynomial_closure(alg, points, budget)
    etab = e.table.astype(np.int64)
    seen: dict[bytes, RestrictedOperation] = {}
    for i in range(len(vc)):
        vals = etab[vc.vector(i).astype(np.int64)]
        key = vals.tobytes()
        if key in seen:
            continue
        witness = substitute(e.witness, {0: vc.term_of(i)})
        seen[key] = RestrictedOperation(universe, m, vals, witness)
    ops = sorted(seen.values(), key=lambda r: r.key())
    return CloneResult(ops, report.complete)

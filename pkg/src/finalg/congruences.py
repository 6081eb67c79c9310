"""Congruences, congruence lattices, term-condition commutators.

The term condition C(alpha, beta; delta) is decided through the closure in
A^4 of the generator rows (a,a,b,b) for (a,b) in alpha and (u,v,u,v) for
(u,v) in beta; the closure consists exactly of the rows
(t(a..,u..), t(a..,v..), t(b..,u..), t(b..,v..)) of term-condition matrices,
so "for every row, x11 ~delta~ x12 implies x21 ~delta~ x22" is an exact
finite decision procedure with no arity bound.

Abelianness ([1,1] = 0) is decided through an equivalent, much cheaper test:
the congruence of A^2 generated by collapsing the diagonal has the diagonal
as a block iff the term condition C(1,1;0) holds.  (Each generation step of
that congruence applies a unary polynomial (x,y) -> (t(x,u..), t(y,v..)) of
A^2 to a collapsed pair, which is exactly a term-condition matrix; the two
formulations are cross-checked in the test suite.)  The square is traversed
virtually, so no power algebra is materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .closure import VectorClosure
from .core import (
    AlgebraError,
    BudgetExceededError,
    ClosureBudget,
    DEFAULT_BUDGET,
    DEFAULT_UNIVERSE_CAP,
    FiniteAlgebra,
    direct_power,
    quotient,
)


class Congruence:
    """A compatible partition; class ids are the least member of each class."""

    __slots__ = ("partition", "size", "_key")

    def __init__(self, partition: Sequence[int]):
        arr = np.asarray(partition, dtype=np.int64)
        # canonicalize to least-member class ids
        first: dict[int, int] = {}
        canon = np.empty_like(arr)
        for i, c in enumerate(arr):
            c = int(c)
            if c not in first:
                first[c] = i
            canon[i] = first[c]
        canon.setflags(write=False)
        self.partition = canon
        self.size = len(canon)
        self._key = canon.tobytes()

    @staticmethod
    def zero(size: int) -> "Congruence":
        return Congruence(np.arange(size))

    @staticmethod
    def one(size: int) -> "Congruence":
        return Congruence(np.zeros(size, dtype=np.int64))

    @staticmethod
    def from_classes(size: int, classes: Iterable[Iterable[int]]) -> "Congruence":
        arr = -np.ones(size, dtype=np.int64)
        for cls in classes:
            cls = sorted(cls)
            for x in cls:
                assert arr[x] == -1, "classes overlap"
                arr[x] = cls[0]
        assert (arr >= 0).all(), "classes do not cover the universe"
        return Congruence(arr)

    def relates(self, a: int, b: int) -> bool:
        return self.partition[a] == self.partition[b]

    def classes(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i, c in enumerate(self.partition):
            out.setdefault(int(c), []).append(i)
        return [out[k] for k in sorted(out)]

    @property
    def num_classes(self) -> int:
        return len(set(int(c) for c in self.partition))

    def is_zero(self) -> bool:
        return self.num_classes == self.size

    def is_one(self) -> bool:
        return self.num_classes == 1

    def leq(self, other: "Congruence") -> bool:
        """True iff self refines other (self <= other in Con)."""
        assert self.size == other.size
        rep_class: dict[int, int] = {}
        for i in range(self.size):
            c = int(self.partition[i])
            d = int(other.partition[i])
            if c in rep_class:
                if rep_class[c] != d:
                    return False
            else:
                rep_class[c] = d
        return True

    def meet(self, other: "Congruence") -> "Congruence":
        assert self.size == other.size
        pairs = self.partition * self.size + other.partition
        return Congruence(_canonical_from_labels(pairs))

    def key(self) -> bytes:
        return self._key

    def __eq__(self, other):
        return isinstance(other, Congruence) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Congruence({[c for c in self.classes()]})"


def _canonical_from_labels(labels: np.ndarray) -> np.ndarray:
    first: dict[int, int] = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, c in enumerate(labels):
        c = int(c)
        if c not in first:
            first[c] = i
        out[i] = first[c]
    return out


def check_compatible(alg: FiniteAlgebra, cong: Congruence) -> None:
    """Raise AlgebraError naming the violating operation/tuple if any."""
    quotient(alg, cong.partition)


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def partition_array(self, n: int) -> np.ndarray:
        labels = np.fromiter((self.find(i) for i in range(n)), dtype=np.int64, count=n)
        return _canonical_from_labels(labels)


def _push_translated(alg, u, v, stack):
    """Push images of the pair (u, v) under all elementary translations."""
    for op in alg.operations:
        if op.arity == 0:
            continue
        tensor = op.tensor(alg.size)
        for pos in range(op.arity):
            a = np.take(tensor, u, axis=pos).ravel()
            b = np.take(tensor, v, axis=pos).ravel()
            mask = a != b
            if not mask.any():
                continue
            enc = np.unique(a[mask] * alg.size + b[mask])
            for e in enc:
                stack.append((int(e) // alg.size, int(e) % alg.size))


def congruence_generated(
    alg: FiniteAlgebra, pairs: Iterable[tuple[int, int]]
) -> Congruence:
    """Least congruence containing the given pairs (Mal'cev-style closure)."""
    uf = _UnionFind(alg.size)
    stack = [(int(a), int(b)) for a, b in pairs]
    while stack:
        u, v = stack.pop()
        if not uf.union(u, v):
            continue
        _push_translated(alg, u, v, stack)
    return Congruence(uf.partition_array(alg.size))


def principal_congruence(alg: FiniteAlgebra, a: int, b: int) -> Congruence:
    if not (0 <= a < alg.size and 0 <= b < alg.size):
        raise AlgebraError("elements out of range")
    return congruence_generated(alg, [(a, b)])


# ---------------------------------------------------------------------------
# Virtual-square congruence generation (used for the diagonal collapse)


def _push_translated_square(alg, u, v, stack):
    """Translations of A^2 factor into independent per-component slices."""
    m = alg.size
    u1, u2 = divmod(u, m)
    v1, v2 = divmod(v, m)
    for op in alg.operations:
        if op.arity == 0:
            continue
        tensor = op.tensor(m)
        for pos in range(op.arity):
            s1 = np.take(tensor, u1, axis=pos).ravel()
            r1 = np.take(tensor, v1, axis=pos).ravel()
            s2 = np.take(tensor, u2, axis=pos).ravel()
            r2 = np.take(tensor, v2, axis=pos).ravel()
            q1 = np.unique(s1 * m + r1)
            q2 = np.unique(s2 * m + r2)
            for e1 in q1:
                p, q = int(e1) // m, int(e1) % m
                for e2 in q2:
                    r, s = int(e2) // m, int(e2) % m
                    if p == q and r == s:
                        continue
                    stack.append((p * m + r, q * m + s))


def square_congruence_generated(
    alg: FiniteAlgebra, pairs: Iterable[tuple[int, int]]
) -> Congruence:
    """Congruence of A^2 generated by pairs of codec-coded square elements.

    The square is never materialized; a pair (x, y) of A is the element
    x * size + y.
    """
    m = alg.size
    uf = _UnionFind(m * m)
    stack = [(int(a), int(b)) for a, b in pairs]
    while stack:
        u, v = stack.pop()
        if not uf.union(u, v):
            continue
        _push_translated_square(alg, u, v, stack)
    return Congruence(uf.partition_array(m * m))


def diagonal_collapse(
    alg: FiniteAlgebra, universe_cap: int = DEFAULT_UNIVERSE_CAP
) -> Congruence:
    """Congruence of A^2 generated by identifying all diagonal pairs."""
    m = alg.size
    if m * m > universe_cap:
        raise BudgetExceededError(f"square universe {m*m} exceeds cap")
    diag0 = 0 * m + 0
    gens = [(diag0, a * m + a) for a in range(1, m)]
    if m == 1:
        return Congruence.one(1)
    return square_congruence_generated(alg, gens)


def is_abelian(alg: FiniteAlgebra) -> bool:
    """Term condition C(1,1;0), decided via the diagonal-collapse congruence."""
    if alg.size == 1:
        return True
    delta = diagonal_collapse(alg)
    m = alg.size
    diag_class = delta.partition[0]  # class of (0,0); all (a,a) fall in it
    members = int(np.sum(delta.partition == diag_class))
    return members == m


# ---------------------------------------------------------------------------
# Term-condition matrix closure


def _pairs_of(cong: Congruence) -> list[tuple[int, int]]:
    out = []
    for cls in cong.classes():
        for a in cls:
            for b in cls:
                out.append((a, b))
    return out


def matrix_closure(
    alg: FiniteAlgebra,
    alpha: Congruence,
    beta: Congruence,
    budget: ClosureBudget = DEFAULT_BUDGET,
    stop=None,
):
    """Closure in A^4 of the (alpha, beta) term-condition generator rows."""
    vc = VectorClosure(alg, 4, budget)
    for a, b in _pairs_of(alpha):
        vc.add_seed(np.array([a, a, b, b]))
    for u, v in _pairs_of(beta):
        vc.add_seed(np.array([u, v, u, v]))
    report = vc.close(stop=stop)
    return vc, report


def centralizes(
    alg: FiniteAlgebra,
    alpha: Congruence,
    beta: Congruence,
    delta: Congruence,
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> bool:
    """C(alpha, beta; delta): no matrix row with x11 ~ x12 but x21 !~ x22."""
    part = delta.partition

    def violates(vec, _idx):
        return part[vec[0]] == part[vec[1]] and part[vec[2]] != part[vec[3]]

    vc, report = matrix_closure(alg, alpha, beta, budget, stop=violates)
    if report.hit is not None:
        return False
    if not report.complete:
        raise BudgetExceededError("matrix closure exhausted budget")
    return True


def commutator(
    alg: FiniteAlgebra,
    alpha: Congruence,
    beta: Congruence,
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> Congruence:
    """[alpha, beta]: least delta such that C(alpha, beta; delta) holds.

    Computed by iterating delta -> Cg{(x21, x22) : x11 ~delta~ x12} over the
    (alpha, beta)-matrix rows until the fixpoint; each step stays below every
    centralizing delta, so the fixpoint is the least one.
    """
    vc, report = matrix_closure(alg, alpha, beta, budget)
    if not report.complete:
        raise BudgetExceededError("matrix closure exhausted budget")
    rows = vc.matrix.astype(np.int64)
    delta = Congruence.zero(alg.size)
    while True:
        part = delta.partition
        mask = part[rows[:, 0]] == part[rows[:, 1]]
        enc = np.unique(rows[mask, 2] * alg.size + rows[mask, 3])
        gen_pairs = [(int(e) // alg.size, int(e) % alg.size) for e in enc]
        new = congruence_generated(alg, gen_pairs)
        if new == delta:
            return delta
        delta = new


def is_strongly_abelian(
    alg: FiniteAlgebra, budget: ClosureBudget = DEFAULT_BUDGET
) -> bool:
    """Strong term condition via the A^4 closure of (a,b,c,c) and (u,v,u,v)."""
    vc = VectorClosure(alg, 4, budget)
    m = alg.size
    for a in range(m):
        for b in range(m):
            for c in range(m):
                vc.add_seed(np.array([a, b, c, c]))
    for u in range(m):
        for v in range(m):
            vc.add_seed(np.array([u, v, u, v]))

    def violates(vec, _idx):
        return vec[0] == vec[1] and vec[2] != vec[3]

    report = vc.close(stop=violates)
    if report.hit is not None:
        return False
    if not report.complete:
        raise BudgetExceededError("strong-term-condition closure exhausted budget")
    return True


# ---------------------------------------------------------------------------
# Congruence lattices


@dataclass
class CongruenceLattice:
    congruences: list[Congruence]
    leq: np.ndarray  # boolean matrix, leq[i, j] iff congruences[i] <= [j]
    covers: list[tuple[int, int]]  # (i, j) with congruences[i] -< congruences[j]
    zero_index: int
    one_index: int
    complete: bool = True

    def __len__(self):
        return len(self.congruences)

    def index_of(self, cong: Congruence) -> int:
        for i, c in enumerate(self.congruences):
            if c == cong:
                return i
        raise KeyError("congruence not in lattice")

    def join(self, i: int, j: int) -> int:
        candidates = [
            k
            for k in range(len(self.congruences))
            if self.leq[i, k] and self.leq[j, k]
        ]
        best = min(candidates, key=lambda k: int(self.leq[:, k].sum()))
        return best

    def meet_index(self, i: int, j: int) -> int:
        met = self.congruences[i].meet(self.congruences[j])
        return self.index_of(met)

    def maximal_indices(self) -> list[int]:
        return sorted(i for (i, j) in self.covers if j == self.one_index)

    def atoms(self) -> list[int]:
        return sorted(j for (i, j) in self.covers if i == self.zero_index)


def join_congruences(alg: FiniteAlgebra, a: Congruence, b: Congruence) -> Congruence:
    """Join in Con(A): close the union under transitivity and compatibility."""
    pairs = []
    for cong in (a, b):
        for cls in cong.classes():
            pairs.extend((cls[0], x) for x in cls[1:])
    return congruence_generated(alg, pairs)


def congruence_lattice(
    alg: FiniteAlgebra,
    budget: ClosureBudget = DEFAULT_BUDGET,
) -> CongruenceLattice:
    """All congruences: join-closure of the principal ones, plus 0."""
    m = alg.size
    zero = Congruence.zero(m)
    found: dict[bytes, Congruence] = {zero.key(): zero}
    principal: list[Congruence] = []
    for a in range(m):
        for b in range(a + 1, m):
            c = congruence_generated(alg, [(a, b)])
            if c.key() not in found:
                found[c.key()] = c
                principal.append(c)
    complete = True
    worklist = list(principal)
    while worklist:
        if len(found) > budget.max_elements:
            complete = False
            break
        item = worklist.pop()
        for other in list(found.values()):
            j = join_congruences(alg, item, other)
            if j.key() not in found:
                found[j.key()] = j
                worklist.append(j)
    congs = sorted(
        found.values(),
        key=lambda c: (-c.num_classes, tuple(int(x) for x in c.partition)),
    )
    n = len(congs)
    leq = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            leq[i, j] = congs[i].leq(congs[j])
    covers = []
    for i in range(n):
        for j in range(n):
            if i == j or not leq[i, j]:
                continue
            if any(leq[i, k] and leq[k, j] and k != i and k != j for k in range(n)):
                continue
            covers.append((i, j))
    zero_index = next(i for i, c in enumerate(congs) if c.is_zero())
    one_index = next(i for i, c in enumerate(congs) if c.is_one())
    return CongruenceLattice(
        congruences=congs,
        leq=leq,
        covers=sorted(covers),
        zero_index=zero_index,
        one_index=one_index,
        complete=complete,
    )


# ---------------------------------------------------------------------------
# Abelianness hierarchy


@dataclass
class AbeliannessProfile:
    abelian: bool
    strongly_abelian: bool
    left_nilpotent: bool
    solvable: bool
    derived_series: list[Congruence] = field(default_factory=list)
    lower_series: list[Congruence] = field(default_factory=list)


def abelianness_profile(
    alg: FiniteAlgebra, budget: ClosureBudget = DEFAULT_BUDGET
) -> AbeliannessProfile:
    one = Congruence.one(alg.size)
    zero = Congruence.zero(alg.size)
    abelian = is_abelian(alg)
    strongly = is_strongly_abelian(alg, budget)

    top = zero if abelian else commutator(alg, one, one, budget)
    derived = [one, top]
    while not derived[-1].is_zero():
        nxt = commutator(alg, derived[-1], derived[-1], budget)
        if nxt == derived[-1]:
            break
        derived.append(nxt)
    solvable = derived[-1].is_zero()

    lower = [one, top]
    while not lower[-1].is_zero():
        nxt = commutator(alg, one, lower[-1], budget)
        if nxt == lower[-1]:
            break
        lower.append(nxt)
    left_nilpotent = lower[-1].is_zero()

    return AbeliannessProfile(
        abelian=abelian,
        strongly_abelian=strongly,
        left_nilpotent=left_nilpotent,
        solvable=solvable,
        derived_series=derived,
        lower_series=lower,
    )


@dataclass
class QuotientSearchResult:
    found: Optional[Congruence]
    complete: bool
    tested_powers: list[int] = field(default_factory=list)


def strongly_abelian_quotient_exists(
    alg: FiniteAlgebra,
    n: int,
    budget: ClosureBudget = DEFAULT_BUDGET,
    universe_cap: int = DEFAULT_UNIVERSE_CAP,
) -> QuotientSearchResult:
    """Search maximal congruences of A^n for a nontrivial strongly abelian
    quotient.  Quotients of strongly abelian algebras are strongly abelian,
    so maximal congruences suffice."""
    try:
        power = direct_power(alg, n, universe_cap=universe_cap)
        lattice = congruence_lattice(power, budget)
    except BudgetExceededError:
        return QuotientSearchResult(found=None, complete=False, tested_powers=[])
    if not lattice.complete:
        return QuotientSearchResult(found=None, complete=False, tested_powers=[])
    if power.size == 1:
        return QuotientSearchResult(found=None, complete=True, tested_powers=[n])
    for idx in lattice.maximal_indices():
        theta = lattice.congruences[idx]
        q, _proj = quotient(power, theta.partition)
        if q.size <= 1:
            continue
        try:
            if is_strongly_abelian(q, budget):
                return QuotientSearchResult(
                    found=theta, complete=True, tested_powers=[n]
                )
        except BudgetExceededError:
            return QuotientSearchResult(found=None, complete=False, tested_powers=[n])
    return QuotientSearchResult(found=None, complete=True, tested_powers=[n])

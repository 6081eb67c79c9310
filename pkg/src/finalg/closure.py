"""Closure of element-vectors under the pointwise action of an algebra.

This is the kernel behind polynomial clones, interpolation searches, induced
algebras and term-condition matrix closures.  A "vector" assigns an algebra
element to each point of a fixed finite index domain; closing a seed set under
all operations applied pointwise yields exactly the restrictions to that
domain of the operations generated by the seeds.

Applying a k-ary operation to all k-tuples of a large set is staged: argument
slots are combined one at a time, and partial applications are deduplicated
via precomputed subtable identifiers.  Two elements whose vectors are
pointwise equivalent for the slot being filled (equal table slices) produce
identical partial applications, so structured tables (direct products, affine
operations) collapse the join work by orders of magnitude, while arbitrary
tables degrade gracefully to the naive bound.  Stage results are cached
between rounds, so each round only joins combinations that involve a slot
vector unseen before; a final fixpoint-verification round costs almost
nothing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    App,
    ClosureBudget,
    Const,
    DEFAULT_BUDGET,
    FiniteAlgebra,
    TermExpression,
    Var,
)

_CHUNK_CELLS = 8_000_000  # cap on cells per staged-join chunk


def _min_uint(n: int):
    if n < 2**8:
        return np.uint8
    if n < 2**16:
        return np.uint16
    return np.uint32


def unique_rows_first(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows of a 2-D array plus the first-occurrence index of each."""
    if arr.shape[0] == 0:
        return arr, np.empty(0, dtype=np.int64)
    a = np.ascontiguousarray(arr)
    void = a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()
    _, first = np.unique(void, return_index=True)
    first.sort()
    return a[first], first


class _StagedOp:
    """Per-operation slot labels and staged subtable transitions."""

    def __init__(self, alg: FiniteAlgebra, op_index: int):
        op = alg.operations[op_index]
        self.symbol = op.symbol
        self.arity = op.arity
        self.value = int(op.table[0]) if op.arity == 0 else None
        size = alg.size
        k = op.arity
        self.slot_labels: list[np.ndarray] = []
        self.transitions: list[np.ndarray] = []
        if k == 0:
            return
        # slot labels: elements inducing identical table slices share a label
        label_reps: list[np.ndarray] = []
        for j in range(k):
            sliced = np.moveaxis(op.tensor(size), j, 0).reshape(size, -1)
            uniq, first = unique_rows_first(sliced)
            keys = {uniq[i].tobytes(): i for i in range(uniq.shape[0])}
            labels = np.array(
                [keys[sliced[e].tobytes()] for e in range(size)],
                dtype=_min_uint(len(uniq)),
            )
            self.slot_labels.append(labels)
            label_reps.append(first)
        # staged transitions: a state is the canonical id of the subtable with
        # the first j arguments fixed; stage-k states are the operation values
        states = op.table.reshape(1, -1)
        for j in range(k):
            reps = label_reps[j]
            width = states.shape[1] // size
            expanded = states.reshape(states.shape[0], size, width)[:, reps, :]
            flat = expanded.reshape(-1, width)
            uniq, _ = unique_rows_first(flat)
            keys = {uniq[i].tobytes(): i for i in range(uniq.shape[0])}
            trans = np.fromiter(
                (keys[flat[i].tobytes()] for i in range(flat.shape[0])),
                dtype=np.int64,
                count=flat.shape[0],
            ).reshape(states.shape[0], len(reps))
            if j == k - 1:
                trans = uniq.ravel()[trans]  # identify final states with values
            self.transitions.append(trans.astype(_min_uint(int(trans.max()) + 1)))
            states = uniq


class _SlotCache:
    """Distinct slot-label vectors seen so far, with one representative each."""

    __slots__ = ("keys", "labvecs", "reps")

    def __init__(self):
        self.keys: set[bytes] = set()
        self.labvecs: list[np.ndarray] = []
        self.reps: list[int] = []


class _StageCache:
    """All distinct stage-j partial states over previously seen slot vectors."""

    __slots__ = ("keys", "states", "args")

    def __init__(self):
        self.keys: set[bytes] = set()
        self.states: list[np.ndarray] = []
        self.args: list[tuple[int, ...]] = []


@dataclass
class ClosureReport:
    complete: bool
    rounds: int
    hit: Optional[int] = None  # element index that satisfied the stop predicate
    reason: str = ""


class _Stopped(Exception):
    def __init__(self, idx: int):
        self.idx = idx


class _Budget(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class VectorClosure:
    """Closure of A-valued vectors over a fixed point domain.

    Elements are deduplicated by table bytes; each carries a derivation, so a
    term witness (first derivation found, not minimal) can be rebuilt for any
    element whose seeds were given terms.  After ``close`` stops early (hit
    or budget), the object must not be closed again.
    """

    def __init__(
        self,
        alg: FiniteAlgebra,
        npoints: int,
        budget: ClosureBudget = DEFAULT_BUDGET,
    ):
        assert npoints >= 1
        self.alg = alg
        self.npoints = npoints
        self.budget = budget
        self.dtype = _min_uint(alg.size)
        self._mat = np.empty((16, npoints), dtype=self.dtype)
        self._count = 0
        self._index: dict[bytes, int] = {}
        self._derivs: list[tuple] = []
        self._staged: dict[int, _StagedOp] = {}
        self._op_ptr: dict[int, int] = {}
        self._op_slots: dict[int, list[_SlotCache]] = {}
        self._op_stages: dict[int, list[_StageCache]] = {}
        self._consts_done: set[int] = set()

    def __len__(self):
        return self._count

    @property
    def matrix(self) -> np.ndarray:
        """All vectors so far as an (N, npoints) array (read-only view)."""
        return self._mat[: self._count]

    def add_seed(self, vec, term: Optional[TermExpression] = None) -> int:
        return self._add(np.asarray(vec), ("term", term))

    def add_projection(self, coord_values, var_index: int) -> int:
        return self._add(np.asarray(coord_values), ("term", Var(var_index)))

    def add_constant(self, element: int) -> int:
        vec = np.full(self.npoints, element)
        return self._add(vec, ("term", Const(element)))

    def _add(self, vec: np.ndarray, deriv: tuple) -> int:
        arr = vec.astype(self.dtype)
        assert arr.shape == (self.npoints,)
        key = arr.tobytes()
        found = self._index.get(key)
        if found is not None:
            return found
        if self._count == self._mat.shape[0]:
            grown = np.empty((2 * self._mat.shape[0], self.npoints), dtype=self.dtype)
            grown[: self._count] = self._mat[: self._count]
            self._mat = grown
        idx = self._count
        self._mat[idx] = arr
        self._count += 1
        self._index[key] = idx
        self._derivs.append(deriv)
        return idx

    def vector(self, idx: int) -> np.ndarray:
        return self._mat[idx]

    def find(self, vec) -> Optional[int]:
        return self._index.get(np.asarray(vec).astype(self.dtype).tobytes())

    def term_of(self, idx: int) -> TermExpression:
        deriv = self._derivs[idx]
        if deriv[0] == "term":
            if deriv[1] is None:
                raise ValueError("element has no term witness")
            return deriv[1]
        _, op_index, args = deriv
        sym = self.alg.operations[op_index].symbol
        return App(sym, tuple(self.term_of(a) for a in args))

    def _staged_op(self, op_index: int) -> _StagedOp:
        if op_index not in self._staged:
            self._staged[op_index] = _StagedOp(self.alg, op_index)
        return self._staged[op_index]

    def close(
        self,
        stop: Optional[Callable[[np.ndarray, int], bool]] = None,
    ) -> ClosureReport:
        """Close under all operations; optionally stop early on a predicate.

        Downstream "absent" verdicts are sound only when the report says the
        closure ran to completion.
        """
        deadline = (
            time.monotonic() + self.budget.max_seconds
            if self.budget.max_seconds is not None
            else None
        )
        try:
            if stop is not None:
                for i in range(self._count):
                    if stop(self._mat[i], i):
                        raise _Stopped(i)
            for rounds in range(1, self.budget.max_rounds + 1):
                before = self._count
                for op_index in range(len(self.alg.operations)):
                    self._apply_op(op_index, stop, deadline)
                if self._count == before:
                    return ClosureReport(True, rounds)
                if self._count > self.budget.max_elements:
                    raise _Budget("elements")
            return ClosureReport(False, self.budget.max_rounds, reason="rounds")
        except _Stopped as s:
            return ClosureReport(False, 0, hit=s.idx, reason="stopped")
        except _Budget as b:
            return ClosureReport(False, 0, reason=b.reason)

    # -- incremental staged application ------------------------------------

    def _apply_op(self, op_index, stop, deadline) -> None:
        sop = self._staged_op(op_index)
        if sop.arity == 0:
            if op_index not in self._consts_done:
                self._consts_done.add(op_index)
                vec = np.full(self.npoints, sop.value, dtype=self.dtype)
                if vec.tobytes() not in self._index:
                    idx = self._add(vec, ("app", op_index, ()))
                    if stop is not None and stop(vec, idx):
                        raise _Stopped(idx)
            return
        k = sop.arity
        slots = self._op_slots.setdefault(op_index, [_SlotCache() for _ in range(k)])
        stages = self._op_stages.setdefault(
            op_index, [_StageCache() for _ in range(k - 1)]
        )
        ptr = self._op_ptr.get(op_index, 0)
        count = self._count
        if ptr == count:
            return
        fresh = self._mat[ptr:count]
        self._op_ptr[op_index] = count
        new_lab: list[list[np.ndarray]] = []
        new_reps: list[list[int]] = []
        for j in range(k):
            uniq, first = unique_rows_first(sop.slot_labels[j][fresh])
            added_vecs, added_reps = [], []
            cache = slots[j]
            for i in range(uniq.shape[0]):
                key = uniq[i].tobytes()
                if key in cache.keys:
                    continue
                cache.keys.add(key)
                added_vecs.append(uniq[i])
                added_reps.append(ptr + int(first[i]))
            new_lab.append(added_vecs)
            new_reps.append(added_reps)
        if not any(new_lab):
            return
        # F carries partial states whose combination involves a new slot
        # vector; O_{j-1} (cached) carries combinations of old vectors only.
        f_states: list[np.ndarray] = [np.zeros(self.npoints, dtype=np.uint32)]
        f_args: list[tuple[int, ...]] = [()]
        f_is_root = True
        for j in range(k):
            trans = sop.transitions[j]
            cache = slots[j]
            old_n = len(cache.labvecs)
            all_lab = cache.labvecs + new_lab[j]
            all_reps = cache.reps + new_reps[j]
            cand_states: list[np.ndarray] = []
            cand_args: list[tuple[int, ...]] = []
            seen: set[bytes] = set()
            known = stages[j].keys if j < k - 1 else None

            def join(states, args, labs, reps):
                if not states or not labs:
                    return
                smat = np.stack(states)
                lmat = np.stack(labs)
                nr = lmat.shape[0]
                chunk = max(1, _CHUNK_CELLS // max(1, nr * self.npoints))
                for start in range(0, smat.shape[0], chunk):
                    if deadline is not None and time.monotonic() > deadline:
                        raise _Budget("seconds")
                    block = trans[smat[start : start + chunk, None, :], lmat[None, :, :]]
                    flat = block.reshape(-1, self.npoints)
                    uniq, first = unique_rows_first(flat)
                    for i in range(uniq.shape[0]):
                        key = uniq[i].tobytes()
                        if key in seen or (known is not None and key in known):
                            continue
                        seen.add(key)
                        p, r = divmod(int(first[i]), nr)
                        cand_states.append(uniq[i])
                        cand_args.append(args[start + p] + (int(reps[r]),))

            if f_is_root:
                # stage 1: root x new vectors are the only fresh combinations
                join(f_states, f_args, new_lab[j], new_reps[j])
            else:
                join(f_states, f_args, all_lab, all_reps)
                o_prev = stages[j - 1]
                join(o_prev.states, o_prev.args, new_lab[j], new_reps[j])
            f_is_root = False
            if j < k - 1:
                st = stages[j]
                st.keys.update(x.tobytes() for x in cand_states)
                st.states.extend(cand_states)
                st.args.extend(cand_args)
                if len(st.states) > self.budget.max_elements:
                    raise _Budget("elements")
                f_states, f_args = cand_states, cand_args
            else:
                for vec, args in zip(cand_states, cand_args):
                    arr = vec.astype(self.dtype)
                    if arr.tobytes() in self._index:
                        continue
                    idx = self._add(arr, ("app", op_index, args))
                    if stop is not None and stop(arr, idx):
                        raise _Stopped(idx)
                    if self._count > self.budget.max_elements:
                        raise _Budget("elements")
            cache.labvecs.extend(new_lab[j])
            cache.reps.extend(new_reps[j])
            if not f_states and j < k - 1:
                # no fresh partials can arise downstream of this stage either,
                # unless a later slot has new vectors feeding cached states
                if not any(new_lab[jj] for jj in range(j + 1, k)):
                    for jj in range(j + 1, k):
                        slots[jj].labvecs.extend(new_lab[jj])
                        slots[jj].reps.extend(new_reps[jj])
                    return

"""Finite first-order structures, formula evaluation, and semigroup certification.

A structure is a finite universe {0, .., m-1} with interpreted function,
relation, and constant symbols. Definable sets are realized as boolean
vectors over the universe (on a finite structure every subset is definable
in the language expanded by one constant per element, so the boolean
vector is the general case).

Formula evaluation enumerates quantifiers over the whole universe; a
formula with q nested quantifier/grid axes costs m**q and is rejected
beyond the evaluation budget.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import formulas as fm
from .errors import (
    BudgetExceededError,
    FreeVariableError,
    ModelError,
    NotCertifiedError,
)

EVAL_BUDGET = 10**8

SEMIGROUP_VARS = ("x", "y", "z")


@dataclass(frozen=True)
class FunctionSymbol:
    arity: int
    table: np.ndarray  # int64, shape (m,)*arity, entries in [0, m)


@dataclass(frozen=True)
class RelationSymbol:
    arity: int
    table: np.ndarray  # bool, shape (m,)*arity

    @classmethod
    def from_tuples(cls, arity: int, tuples, size: int) -> "RelationSymbol":
        table = np.zeros((size,) * arity, dtype=bool)
        for tup in tuples:
            if len(tup) != arity:
                raise ModelError(f"relation tuple {tup} does not have arity {arity}")
            for v in tup:
                if not 0 <= int(v) < size:
                    raise ModelError(f"relation tuple {tup} has entry outside the universe")
            table[tuple(int(v) for v in tup)] = True
        return cls(arity, table)

    def tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in idx) for idx in np.argwhere(self.table)]


class FiniteStructure:
    """A finite model: universe size plus interpreted symbols.

    Immutable after construction except for the certificate slot, which
    `verify_semigroup` fills in once.
    """

    def __init__(
        self,
        size: int,
        functions: dict[str, FunctionSymbol] | None = None,
        relations: dict[str, RelationSymbol] | None = None,
        constants: dict[str, int] | None = None,
        element_names: dict[str, int] | None = None,
        semigroup: dict | None = None,
    ):
        if size < 1:
            raise ModelError("universe must have at least one element")
        self.size = int(size)
        self.functions = dict(functions or {})
        self.relations = dict(relations or {})
        self.constants = {k: int(v) for k, v in (constants or {}).items()}
        self.element_names = dict(element_names) if element_names else None
        self.semigroup_spec = dict(semigroup) if semigroup else None
        self.certificate: SemigroupCertificate | None = None
        self._fingerprint: str | None = None
        self._validate()

    def _validate(self) -> None:
        m = self.size
        for name, fn in self.functions.items():
            table = np.asarray(fn.table)
            if table.shape != (m,) * fn.arity:
                raise ModelError(f"function {name!r}: table shape {table.shape} is not (m,)*{fn.arity}")
            if table.size and (table.min() < 0 or table.max() >= m):
                raise ModelError(f"function {name!r}: table entry outside the universe")
            if fn.arity < 1:
                raise ModelError(f"function {name!r}: arity must be at least 1")
        for name, rel in self.relations.items():
            if rel.table.shape != (m,) * rel.arity:
                raise ModelError(f"relation {name!r}: table shape {rel.table.shape} is not (m,)*{rel.arity}")
            if rel.arity < 1:
                raise ModelError(f"relation {name!r}: arity must be at least 1")
        for name, idx in self.constants.items():
            if not 0 <= idx < m:
                raise ModelError(f"constant {name!r} = {idx} outside the universe")
        if self.element_names is not None:
            if len(set(self.element_names.values())) != len(self.element_names):
                raise ModelError("element names are not injective")
            for name, idx in self.element_names.items():
                if not 0 <= int(idx) < m:
                    raise ModelError(f"element name {name!r} = {idx} outside the universe")
        if self.semigroup_spec is not None:
            keys = set(self.semigroup_spec)
            if keys not in ({"formula"}, {"function"}):
                raise ModelError('semigroup spec must be {"formula": ...} or {"function": ...}')
            if "function" in self.semigroup_spec:
                fn = self.semigroup_spec["function"]
                if fn not in self.functions or self.functions[fn].arity != 2:
                    raise ModelError(f"semigroup function {fn!r} must be a declared binary function")

    # signature protocol used by the parser
    def function_arity(self, name: str) -> int | None:
        fn = self.functions.get(name)
        return fn.arity if fn else None

    def relation_arity(self, name: str) -> int | None:
        rel = self.relations.get(name)
        return rel.arity if rel else None

    def constant_index(self, name: str) -> int | None:
        if name in self.constants:
            return self.constants[name]
        if self.element_names and name in self.element_names:
            return self.element_names[name]
        return None

    def element_index(self, label) -> int:
        """Resolve an element given as an index or a name."""
        if isinstance(label, str):
            idx = self.constant_index(label)
            if idx is None:
                raise ModelError(f"unknown element name {label!r}")
            return idx
        idx = int(label)
        if not 0 <= idx < self.size:
            raise ModelError(f"element index {idx} outside universe of size {self.size}")
        return idx

    @property
    def fingerprint(self) -> str:
        if self._fingerprint is None:
            h = hashlib.sha1()
            h.update(str(self.size).encode())
            for name in sorted(self.functions):
                fn = self.functions[name]
                h.update(f"f:{name}:{fn.arity}".encode())
                h.update(np.ascontiguousarray(fn.table, dtype=np.int64).tobytes())
            for name in sorted(self.relations):
                rel = self.relations[name]
                h.update(f"r:{name}:{rel.arity}".encode())
                h.update(np.ascontiguousarray(rel.table).tobytes())
            for name in sorted(self.constants):
                h.update(f"c:{name}:{self.constants[name]}".encode())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def __repr__(self):
        return f"FiniteStructure(size={self.size}, fingerprint={self.fingerprint[:12]})"


def same_structure(a: FiniteStructure, b: FiniteStructure) -> bool:
    return a is b or (a.size == b.size and a.fingerprint == b.fingerprint)


# --- Formula evaluation -------------------------------------------------

def _axis_grid(m: int, axis: int, rank: int) -> np.ndarray:
    shape = [1] * rank
    shape[axis] = m
    return np.arange(m).reshape(shape)


def _eval_term(t, s: FiniteStructure, bind: dict, rank: int):
    if isinstance(t, fm.Var):
        kind, val = bind[t.name]
        return _axis_grid(s.size, val, rank) if kind == "axis" else val
    if isinstance(t, fm.Const):
        return t.index
    args = tuple(_eval_term(a, s, bind, rank) for a in t.args)
    return s.functions[t.name].table[args]


def _eval_node(f, s: FiniteStructure, bind: dict, rank: int):
    m = s.size
    if isinstance(f, fm.RelationAtom):
        args = tuple(_eval_term(a, s, bind, rank) for a in f.args)
        return s.relations[f.name].table[args]
    if isinstance(f, fm.EqualityAtom):
        return np.equal(_eval_term(f.left, s, bind, rank), _eval_term(f.right, s, bind, rank))
    if isinstance(f, fm.Not):
        return np.logical_not(_eval_node(f.body, s, bind, rank))
    if isinstance(f, fm.And):
        return np.logical_and(_eval_node(f.left, s, bind, rank), _eval_node(f.right, s, bind, rank))
    if isinstance(f, fm.Or):
        return np.logical_or(_eval_node(f.left, s, bind, rank), _eval_node(f.right, s, bind, rank))
    if isinstance(f, fm.Implies):
        return np.logical_or(
            np.logical_not(_eval_node(f.left, s, bind, rank)), _eval_node(f.right, s, bind, rank)
        )
    # quantifier: the bound variable gets the next axis
    inner = dict(bind)
    inner[f.var] = ("axis", rank)
    body = np.broadcast_to(_eval_node(f.body, s, inner, rank + 1), (m,) * (rank + 1))
    if isinstance(f, fm.Forall):
        return body.all(axis=-1)
    if isinstance(f, fm.Exists):
        return body.any(axis=-1)
    return np.count_nonzero(body, axis=-1) == 1


def evaluate_region(
    s: FiniteStructure,
    f: fm.Formula,
    grid_vars: tuple[str, ...] = (),
    env: dict[str, int] | None = None,
) -> np.ndarray:
    """Truth table of f over the grid of `grid_vars`, other free vars from env.

    The result has shape (m,)*len(grid_vars), axis i indexed by grid_vars[i].
    """
    env = env or {}
    free = fm.free_variables(f)
    missing = free - set(grid_vars) - set(env)
    if missing:
        raise FreeVariableError(f"unbound free variables: {sorted(missing)}")
    axes = len(grid_vars) + fm.quantifier_depth(f)
    if axes > 0 and s.size**axes > EVAL_BUDGET:
        raise BudgetExceededError(
            f"enumeration cost m**{axes} = {s.size}**{axes} exceeds budget {EVAL_BUDGET}"
        )
    bind: dict = {v: ("axis", i) for i, v in enumerate(grid_vars)}
    for name, value in env.items():
        if name not in bind:
            bind[name] = ("value", s.element_index(value))
    out = _eval_node(f, s, bind, len(grid_vars))
    return np.array(np.broadcast_to(out, (s.size,) * len(grid_vars)), dtype=bool)


def eval_formula(s: FiniteStructure, f: fm.Formula, env: dict[str, int] | None = None) -> bool:
    """Truth value of f with every free variable bound by env."""
    return bool(evaluate_region(s, f, (), env))


def definable_set(s: FiniteStructure, f: fm.Formula, free_var: str) -> np.ndarray:
    """Boolean vector of the elements satisfying a one-free-variable formula."""
    free = fm.free_variables(f)
    if free != {free_var}:
        raise FreeVariableError(
            f"expected exactly one free variable {free_var!r}, formula has {sorted(free)}"
        )
    return evaluate_region(s, f, (free_var,))


# --- Semigroup certification --------------------------------------------

AXIOM_NAMES = ("unique_sum", "commutativity", "associativity", "neutral_element")


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    holds: bool
    counterexample: tuple[int, ...] | None


@dataclass(frozen=True)
class SemigroupCertificate:
    """Outcome of exhaustively checking the four semigroup axioms.

    add_table is present whenever sums are unique; zero whenever a neutral
    element exists (verified unique when the other axioms hold). The first
    counterexample in lexicographic scan order is recorded per failed axiom.
    """

    add_table: np.ndarray | None
    zero: int | None
    axioms: tuple[AxiomCheck, AxiomCheck, AxiomCheck, AxiomCheck]

    @property
    def passed(self) -> bool:
        return all(a.holds for a in self.axioms)

    def axiom(self, name: str) -> AxiomCheck:
        for a in self.axioms:
            if a.name == name:
                return a
        raise KeyError(name)


def _first_true(mask: np.ndarray) -> tuple[int, ...]:
    # C-order argwhere is the lexicographic scan
    idx = np.argwhere(mask)[0]
    return tuple(int(v) for v in idx)


def semigroup_formula(s: FiniteStructure) -> fm.Formula:
    """The structure's semigroup relation as a formula in x, y, z."""
    if s.semigroup_spec is None:
        raise ModelError("structure declares no semigroup")
    if "formula" in s.semigroup_spec:
        return fm.parse_formula(s.semigroup_spec["formula"], s)
    fn = s.semigroup_spec["function"]
    return fm.parse_formula(f"{fn}(x, y) = z", s)


def verify_semigroup(
    s: FiniteStructure, theta: fm.Formula | None = None, install: bool = True
) -> SemigroupCertificate:
    """Exhaustively check that theta(x, y, z) defines a commutative monoid.

    Checks, in order: every pair has a unique sum; the sum is commutative;
    the sum is associative; a neutral element exists (necessarily unique
    given the previous axioms, which is verified rather than assumed). On
    success the addition table and neutral index are extracted. Axiom
    failures are reported in the certificate, not raised.
    """
    if theta is None:
        theta = semigroup_formula(s)
    extra = fm.free_variables(theta) - set(SEMIGROUP_VARS)
    if extra:
        raise FreeVariableError(
            f"semigroup formula may only use free variables x, y, z; found {sorted(extra)}"
        )
    m = s.size
    graph = evaluate_region(s, theta, SEMIGROUP_VARS)

    counts = np.count_nonzero(graph, axis=2)
    bad_pairs = counts != 1
    holds1 = not bad_pairs.any()
    cex1 = None if holds1 else _first_true(bad_pairs)
    add = np.argmax(graph, axis=2).astype(np.int64) if holds1 else None

    comm_bad = graph != graph.transpose(1, 0, 2)
    holds2 = not comm_bad.any()
    cex2 = None if holds2 else _first_true(comm_bad)

    if holds1:
        left = add[add]  # left[x,y,z] = add[add[x,y], z]
        right = add[np.arange(m)[:, None, None], add[None, :, :]]
        assoc_bad = left != right
        holds3 = not assoc_bad.any()
        if holds3:
            cex3 = None
        else:
            x, y, z = _first_true(assoc_bad)
            # the biconditional over (x,y,z,w) first fails at the smaller sum
            cex3 = (x, y, z, int(min(left[x, y, z], right[x, y, z])))
    else:
        gf = graph.astype(np.float32)
        lhs = np.einsum("xyv,vzw->xyzw", gf, gf, optimize=True) > 0.5
        rhs = np.einsum("yzu,xuw->xyzw", gf, gf, optimize=True) > 0.5
        assoc_bad = lhs != rhs
        holds3 = not assoc_bad.any()
        cex3 = None if holds3 else _first_true(assoc_bad)

    diag = graph[:, np.arange(m), np.arange(m)]  # diag[x,y] = theta(x,y,y)
    witnesses = np.flatnonzero(diag.all(axis=1))
    holds4 = witnesses.size > 0
    zero = int(witnesses[0]) if witnesses.size == 1 else None
    if holds1 and holds2 and witnesses.size > 1:
        raise AssertionError("multiple neutral elements despite unique commutative sums")

    cert = SemigroupCertificate(
        add_table=add,
        zero=zero,
        axioms=(
            AxiomCheck(AXIOM_NAMES[0], holds1, cex1),
            AxiomCheck(AXIOM_NAMES[1], holds2, cex2),
            AxiomCheck(AXIOM_NAMES[2], holds3, cex3),
            AxiomCheck(AXIOM_NAMES[3], holds4, None),
        ),
    )
    if install and cert.passed:
        s.certificate = cert
    return cert


def certified_table(s: FiniteStructure) -> np.ndarray:
    """The verified addition table; raises if the structure is uncertified."""
    cert = s.certificate
    if cert is None or not cert.passed or cert.add_table is None:
        raise NotCertifiedError(
            "structure has no passing semigroup certificate; run verify_semigroup first"
        )
    return cert.add_table


def certified_zero(s: FiniteStructure) -> int:
    cert = s.certificate
    if cert is None or not cert.passed or cert.zero is None:
        raise NotCertifiedError(
            "structure has no passing semigroup certificate; run verify_semigroup first"
        )
    return cert.zero

"""Shared test utilities: independent oracles and seeded generators."""

from __future__ import annotations

import math

import numpy as np

import finconv as fc
import finconv.formulas as fm
from finconv import catalog


# --- structure zoo -----------------------------------------------------------

def certified(s):
    fc.verify_semigroup(s)
    return s


def random_semigroup(rng, max_m=16):
    """A random verified commutative monoid: cyclic groups, chains, their
    products, all under a random relabeling of the universe."""
    kind = int(rng.integers(0, 4))
    if kind == 0:
        base = catalog.cyclic_group(int(rng.integers(1, max_m + 1)))
    elif kind == 1:
        base = catalog.chain_semilattice(int(rng.integers(1, max_m + 1)))
    else:
        a = int(rng.integers(1, 5))
        b = int(rng.integers(1, max(2, max_m // a) + 1))
        first = catalog.cyclic_group(a) if kind == 2 else catalog.chain_semilattice(a)
        second = catalog.chain_semilattice(b) if kind == 2 else catalog.cyclic_group(b)
        base = catalog.product_of(certified(first), certified(second))
    perm = rng.permutation(base.size)
    return certified(catalog.relabeled(certified(base), perm))


def random_measure(s, rng):
    return fc.measure(s, rng.dirichlet(np.ones(s.size)))


def interior_measure(s, rng, floor=0.1):
    """Random measure bounded away from the simplex boundary."""
    w = (1 - floor) * rng.dirichlet(np.ones(s.size)) + floor / s.size
    return fc.measure(s, w)


def conditioned_chain_root(chain, rng, bottom_mass):
    """Chain root with a heavy bottom element, keeping high powers of its
    cumulative function numerically visible."""
    m = chain.size
    w = (1 - bottom_mass) * rng.dirichlet(np.ones(m))
    w[0] += bottom_mass
    return fc.measure(chain, w)


# --- independent oracles ------------------------------------------------------

def scalar_eval(s, f, env):
    """Plain recursive evaluation with python ints, no vectorization."""

    def term(t, env):
        if isinstance(t, fm.Var):
            return env[t.name]
        if isinstance(t, fm.Const):
            return t.index
        return int(s.functions[t.name].table[tuple(term(a, env) for a in t.args)])

    def go(f, env):
        if isinstance(f, fm.RelationAtom):
            return bool(s.relations[f.name].table[tuple(term(a, env) for a in f.args)])
        if isinstance(f, fm.EqualityAtom):
            return term(f.left, env) == term(f.right, env)
        if isinstance(f, fm.Not):
            return not go(f.body, env)
        if isinstance(f, fm.And):
            return go(f.left, env) and go(f.right, env)
        if isinstance(f, fm.Or):
            return go(f.left, env) or go(f.right, env)
        if isinstance(f, fm.Implies):
            return (not go(f.left, env)) or go(f.right, env)
        values = [go(f.body, {**env, f.var: v}) for v in range(s.size)]
        if isinstance(f, fm.Forall):
            return all(values)
        if isinstance(f, fm.Exists):
            return any(values)
        return sum(values) == 1

    return go(f, env)


def iterative_power(mu, n):
    """Repeated convolution, the order conv_power does not use."""
    out = fc.dirac(mu.structure, mu.structure.certificate.zero)
    for _ in range(n):
        out = fc.convolve(out, mu)
    return out


def cyclic_exp_oracle(mu, r):
    """Exponential via the character transform on a cyclic group."""
    c = np.fft.fft(mu.weights)
    w = np.fft.ifft(np.exp(r * (c - 1.0))).real
    return fc.measure(mu.structure, np.maximum(w, 0.0))


def direct_series_exp(mu, r, terms=200):
    """Plain partial sum of the exponential series, no truncation logic."""
    acc = np.zeros(mu.size)
    power = fc.dirac(mu.structure, mu.structure.certificate.zero)
    coeff = math.exp(-r)
    for n in range(terms):
        acc = acc + coeff * power.weights
        power = fc.convolve(power, mu)
        coeff = coeff * r / (n + 1)
    return acc


def fd_tangent_gradient(jfun, w, eps=1e-6):
    """Central differences along the simplex-tangent directions e_i - u."""
    m = w.size
    out = np.empty(m)
    for i in range(m):
        d = np.full(m, -1.0 / m)
        d[i] += 1.0
        out[i] = (jfun(w + eps * d) - jfun(w - eps * d)) / (2 * eps)
    return out


# --- random formulas -----------------------------------------------------------

def random_formula(rng, s, free_var="x", max_quant=2, tries=50):
    """A random formula whose free-variable set is exactly {free_var}."""
    names = sorted(s.element_names) if s.element_names else []
    functions = sorted(s.functions)
    relations = sorted(s.relations)

    def term(scope, depth):
        roll = rng.random()
        if functions and roll < 0.25 and depth > 0:
            name = functions[int(rng.integers(len(functions)))]
            arity = s.functions[name].arity
            return fm.Apply(name, tuple(term(scope, depth - 1) for _ in range(arity)))
        if names and roll < 0.45:
            label = names[int(rng.integers(len(names)))]
            return fm.Const(label, s.element_names[label])
        return fm.Var(scope[int(rng.integers(len(scope)))])

    def atom(scope):
        if relations and rng.random() < 0.6:
            name = relations[int(rng.integers(len(relations)))]
            arity = s.relations[name].arity
            return fm.RelationAtom(name, tuple(term(scope, 1) for _ in range(arity)))
        return fm.EqualityAtom(term(scope, 1), term(scope, 1))

    def build(scope, depth, quant_budget):
        roll = rng.random()
        if depth <= 0:
            return atom(scope)
        if roll < 0.2 and quant_budget > 0:
            var = f"q{quant_budget}"
            body = build(scope + [var], depth - 1, quant_budget - 1)
            kind = int(rng.integers(0, 3))
            cls = (fm.Forall, fm.Exists, fm.ExistsUnique)[kind]
            return cls(var, body)
        if roll < 0.35:
            return fm.Not(build(scope, depth - 1, quant_budget))
        if roll < 0.9:
            cls = (fm.And, fm.Or, fm.Implies)[int(rng.integers(0, 3))]
            return cls(
                build(scope, depth - 1, quant_budget),
                build(scope, depth - 1, quant_budget),
            )
        return atom(scope)

    for _ in range(tries):
        f = build([free_var], int(rng.integers(1, 4)), max_quant)
        if fm.free_variables(f) == {free_var}:
            return f
    return fm.EqualityAtom(fm.Var(free_var), fm.Var(free_var))

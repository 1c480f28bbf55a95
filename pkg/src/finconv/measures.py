"""Probabilities on a finite structure and their convolution algebra.

A measure is a non-negative weight vector over the universe summing to 1.
The convolution of two measures pushes the product measure through the
certified semigroup sum: (mu * nu)(z) = sum over x + y = z of mu(x) nu(y).
From it come powers, the Poisson-weighted exponential series, and total
variation as the metric on the simplex.

Summation discipline: scalar reductions use math.fsum (exactly rounded);
the long vector accumulations in mixtures and the exponential series use
compensated addition; the bilinear convolution kernel accumulates in C
through np.bincount in a fixed order, whose worst-case error m^2 * eps
stays far inside every tolerance asserted at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeasureError, StructureMismatchError
from .structures import FiniteStructure, certified_table, certified_zero, same_structure

SUM_TOL = 1e-9  # accepted deviation of input weights from total mass 1
_CLAMP = 1e-9  # most negative weight an internal result may carry before renormalizing


@dataclass(frozen=True)
class Measure:
    """An immutable probability vector over a structure's universe."""

    weights: np.ndarray
    structure: FiniteStructure

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def mass_at(self, a: int) -> float:
        return float(self.weights[a])

    def __repr__(self):
        w = ", ".join(f"{v:.6g}" for v in self.weights)
        return f"Measure([{w}])"


def _check_pair(mu: Measure, nu: Measure) -> None:
    if not same_structure(mu.structure, nu.structure):
        raise StructureMismatchError("measures live on different structures")


def measure(structure: FiniteStructure, weights) -> Measure:
    """Validate a weight vector and renormalize it onto the simplex."""
    w = np.array(weights, dtype=np.float64)
    if w.shape != (structure.size,):
        raise MeasureError(f"expected {structure.size} weights, got shape {w.shape}")
    if (w < 0).any():
        worst = float(w.min())
        if worst < -SUM_TOL:
            raise MeasureError(f"negative weight {worst}")
        w = np.maximum(w, 0.0)
    total = math.fsum(w.tolist())
    if not (1 - SUM_TOL <= total <= 1 + SUM_TOL):
        raise MeasureError(f"weights sum to {total}, not 1 within {SUM_TOL}")
    return Measure(w / total, structure)


def _from_raw(structure: FiniteStructure, w: np.ndarray) -> Measure:
    """Wrap an internally computed vector, absorbing float fuzz."""
    low = float(w.min())
    if low < 0.0:
        if low < -_CLAMP:
            raise MeasureError(f"internal weight {low} below the clamp tolerance")
        w = np.maximum(w, 0.0)
    total = math.fsum(w.tolist())
    return Measure(w / total, structure)


def dirac(structure: FiniteStructure, a: int) -> Measure:
    """Point mass at element a."""
    a = int(a)
    if not 0 <= a < structure.size:
        raise MeasureError(f"element index {a} outside universe of size {structure.size}")
    w = np.zeros(structure.size)
    w[a] = 1.0
    return Measure(w, structure)


def uniform(structure: FiniteStructure) -> Measure:
    return Measure(np.full(structure.size, 1.0 / structure.size), structure)


def _compensated_accumulate(vectors, coeffs, size: int) -> np.ndarray:
    """Sum of coeff_i * vec_i with per-coordinate compensation."""
    acc = np.zeros(size)
    comp = np.zeros(size)
    for c, v in zip(coeffs, vectors):
        term = c * v - comp
        t = acc + term
        comp = (t - acc) - term
        acc = t
    return acc


def mix(coeffs, measures: list[Measure]) -> Measure:
    """Convex combination of measures on a shared structure."""
    if len(coeffs) != len(measures):
        raise MeasureError(f"{len(coeffs)} coefficients for {len(measures)} measures")
    if not measures:
        raise MeasureError("empty mixture")
    first = measures[0]
    for m in measures[1:]:
        _check_pair(first, m)
    cs = [float(c) for c in coeffs]
    if any(c < 0 for c in cs):
        raise MeasureError("negative mixture coefficient")
    total = math.fsum(cs)
    if not (1 - SUM_TOL <= total <= 1 + SUM_TOL):
        raise MeasureError(f"mixture coefficients sum to {total}, not 1 within {SUM_TOL}")
    w = _compensated_accumulate((m.weights for m in measures), cs, first.size)
    return _from_raw(first.structure, w)


# --- raw kernels (shared with the solver) --------------------------------

def _convolve_raw(flat_table: np.ndarray, m: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bincount(flat_table, weights=np.multiply.outer(a, b).ravel(), minlength=m)


def _power_raw(flat_table: np.ndarray, m: int, zero: int, a: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        out = np.zeros(m)
        out[zero] = 1.0
        return out
    result = None
    base = a
    k = n
    while True:
        if k & 1:
            result = base if result is None else _convolve_raw(flat_table, m, result, base)
        k >>= 1
        if k == 0:
            break
        base = _convolve_raw(flat_table, m, base, base)
    return result


def _correlate_raw(table: np.ndarray, c: np.ndarray, g: np.ndarray) -> np.ndarray:
    # out[y] = sum_x c[x] * g[table[x, y]]
    return (c[:, None] * g[table]).sum(axis=0)


def _tv_raw(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * math.fsum(np.abs(a - b).tolist())


# --- public operations ----------------------------------------------------

def convolve(mu: Measure, nu: Measure) -> Measure:
    """Law of the sum of independent draws from mu and nu."""
    _check_pair(mu, nu)
    table = certified_table(mu.structure)
    out = _convolve_raw(table.ravel(), mu.size, mu.weights, nu.weights)
    return _from_raw(mu.structure, out)


def translate(mu: Measure, a: int) -> Measure:
    """Convolution with the point mass at a, via a single table column."""
    table = certified_table(mu.structure)
    a = int(a)
    if not 0 <= a < mu.size:
        raise MeasureError(f"element index {a} outside universe of size {mu.size}")
    out = np.bincount(table[:, a], weights=mu.weights, minlength=mu.size)
    return _from_raw(mu.structure, out)


def conv_power(mu: Measure, n: int) -> Measure:
    """n-fold self-convolution by binary exponentiation; n = 0 is the point mass at 0."""
    if n < 0:
        raise MeasureError("convolution power requires n >= 0")
    table = certified_table(mu.structure)
    zero = certified_zero(mu.structure)
    if n == 0:
        return dirac(mu.structure, zero)
    if n == 1:
        return mu
    out = _power_raw(table.ravel(), mu.size, zero, mu.weights, n)
    return _from_raw(mu.structure, out)


def _series_raw(flat_table, m, zero, w, r, tol):
    """Poisson-weighted power series, truncated with a certified tail bound.

    Terms are added until the remaining Poisson(r) mass, bounded by the
    geometric majorant p_(N+1) / (1 - r/(N+2)), drops below tol/2; since
    each power is a probability, the dropped total-variation mass is at
    most half of that, and the closing renormalization at most doubles it.
    """
    acc = np.zeros(m)
    comp = np.zeros(m)
    power = np.zeros(m)
    power[zero] = 1.0
    p = math.exp(-r)
    n = 0
    while True:
        term = p * power - comp
        t = acc + term
        comp = (t - acc) - term
        acc = t
        p_next = p * r / (n + 1)
        if n + 2 > r and p_next / (1.0 - r / (n + 2)) < tol / 2:
            break
        power = _convolve_raw(flat_table, m, power, w)
        p = p_next
        n += 1
    return acc


def conv_exp(mu: Measure, r: float, tol: float, method: str = "series") -> Measure:
    """Exponential of the measure under convolution, within tol in total variation.

    The default evaluates the Poisson-weighted series directly, which
    carries a certifiable truncation bound. method="squaring" instead
    halves r until small, runs the series there, and squares back up;
    each squaring doubles the inherited error, so the inner tolerance is
    scaled down accordingly.
    """
    r = float(r)
    if not math.isfinite(r) or r < 0:
        raise MeasureError(f"rate must be finite and non-negative, got {r}")
    if not tol > 0:
        raise MeasureError(f"tolerance must be positive, got {tol}")
    table = certified_table(mu.structure)
    zero = certified_zero(mu.structure)
    if r == 0.0:
        return dirac(mu.structure, zero)
    if method == "series" and r > 700:
        method = "squaring"  # exp(-r) underflows; squaring stays in range
    flat = table.ravel()
    if method == "series":
        acc = _series_raw(flat, mu.size, zero, mu.weights, r, tol)
    elif method == "squaring":
        halvings = max(0, math.ceil(math.log2(r / 0.25))) if r > 0.25 else 0
        inner_tol = tol / (2.0 ** (halvings + 1))
        acc = _series_raw(flat, mu.size, zero, mu.weights, r / 2.0**halvings, inner_tol)
        acc = acc / math.fsum(acc.tolist())
        for _ in range(halvings):
            acc = _convolve_raw(flat, mu.size, acc, acc)
    else:
        raise MeasureError(f"unknown conv_exp method {method!r}")
    return _from_raw(mu.structure, acc)


def tv_distance(mu: Measure, nu: Measure) -> float:
    """Half the L1 distance; equals the largest discrepancy over event sets."""
    _check_pair(mu, nu)
    return min(1.0, _tv_raw(mu.weights, nu.weights))


def measure_of_event(mu: Measure, event: np.ndarray) -> float:
    """Total mass of an event given as a boolean vector over the universe."""
    ev = np.asarray(event, dtype=bool)
    if ev.shape != (mu.size,):
        raise MeasureError(f"event has shape {ev.shape}, expected ({mu.size},)")
    return math.fsum(mu.weights[ev].tolist())

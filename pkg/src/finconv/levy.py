"""Processes on timelines: grids of convolution powers and sampled exponentials.

A path assigns one measure per tick of a timeline with endpoints 0 and 1.
Root-generated paths put the k-th power of a root at tick k/N; exponential
paths put the exponential at rate t*r at tick t. Validation checks the
start at the point mass, the increment law X(s+t) = X(s) * X(t) over every
tick pair whose sum is a tick, and marginal divisibility where both t and
t/n are ticks.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import StructureMismatchError, TimelineError
from .measures import Measure, conv_exp, conv_power, convolve, dirac, tv_distance
from .parallel import parallel_map
from .structures import certified_zero, same_structure

TICK_MATCH_TOL = 1e-12  # absolute slack when matching real-valued ticks

UNIFORM_GRID = "uniform_grid"
RATIONALS = "rationals"
SAMPLES = "samples"


@dataclass(frozen=True)
class Timeline:
    """Sorted ticks in [0, 1] including both endpoints.

    Ticks are exact fractions for uniform grids and rational timelines,
    floats for sampled ones; tick sums are matched exactly in the rational
    case and within an absolute tolerance in the sampled case.
    """

    kind: str
    ticks: tuple

    @cached_property
    def _positions(self) -> dict:
        return {t: i for i, t in enumerate(self.ticks)}

    def locate(self, value) -> int | None:
        """Index of the tick equal to value, or None."""
        if self.kind == SAMPLES:
            i = bisect_left(self.ticks, float(value) - TICK_MATCH_TOL)
            if i < len(self.ticks) and abs(self.ticks[i] - float(value)) <= TICK_MATCH_TOL:
                return i
            return None
        return self._positions.get(value)

    def __len__(self):
        return len(self.ticks)


def make_timeline(kind: str, params) -> Timeline:
    """Build a timeline: uniform_grid(N), rationals(list), or samples(list)."""
    if kind == UNIFORM_GRID:
        n = int(params)
        if n < 1:
            raise TimelineError("uniform grid needs N >= 1")
        return Timeline(UNIFORM_GRID, tuple(Fraction(k, n) for k in range(n + 1)))
    if kind == RATIONALS:
        ticks = {Fraction(0), Fraction(1)}
        for p in params:
            f = Fraction(p)
            if not 0 <= f <= 1:
                raise TimelineError(f"tick {p} outside [0, 1]")
            ticks.add(f)
        return Timeline(RATIONALS, tuple(sorted(ticks)))
    if kind == SAMPLES:
        values = [float(p) for p in params]
        if not values:
            raise TimelineError("empty sample list")
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise TimelineError(f"tick {v} outside [0, 1]")
        return Timeline(SAMPLES, tuple(sorted(set(values) | {0.0, 1.0})))
    raise TimelineError(f"unknown timeline kind {kind!r}")


def uniform_grid(n: int) -> Timeline:
    return make_timeline(UNIFORM_GRID, n)


@dataclass(frozen=True)
class LevyValidationReport:
    tol: float
    start_error: float
    worst_increment: float
    increment_at: tuple | None
    increments_checked: int
    worst_division: float
    division_at: tuple | None
    divisions_checked: int

    @property
    def passed(self) -> bool:
        return (
            self.start_error <= self.tol
            and self.worst_increment <= self.tol
            and self.worst_division <= self.tol
        )


@dataclass
class LevyPath:
    timeline: Timeline
    marginals: tuple[Measure, ...]
    generator: dict
    validation: LevyValidationReport | None = field(default=None)

    @property
    def structure(self):
        return self.marginals[0].structure


def levy_from_root(nu: Measure, n_steps: int, threads: int = 1) -> LevyPath:
    """Path on the uniform grid with the k-th power of nu at tick k/N.

    Every marginal is computed by binary exponentiation, so the endpoint
    is bit-identical to conv_power(nu, N).
    """
    if n_steps < 1:
        raise TimelineError("grid needs N >= 1")
    timeline = uniform_grid(n_steps)
    marginals = parallel_map(lambda k: conv_power(nu, k), range(n_steps + 1), threads)
    generator = {
        "kind": "root",
        "N": n_steps,
        "weights": [float(w) for w in nu.weights],
        "structure": nu.structure.fingerprint,
    }
    return LevyPath(timeline, tuple(marginals), generator)


def levy_from_exponential(
    nu: Measure, r: float, timeline: Timeline, tol: float, threads: int = 1
) -> LevyPath:
    """Path with the exponential at rate t*r at tick t; exact point mass at t=0."""
    marginals = parallel_map(
        lambda t: conv_exp(nu, float(t) * float(r), tol), timeline.ticks, threads
    )
    generator = {
        "kind": "exponential",
        "r": float(r),
        "tol": float(tol),
        "weights": [float(w) for w in nu.weights],
        "structure": nu.structure.fingerprint,
    }
    return LevyPath(timeline, tuple(marginals), generator)


def _tick_ratio(t, u, kind) -> int | None:
    """t / u as an integer >= 2, or None."""
    if kind == SAMPLES:
        if u <= 0:
            return None
        ratio = t / u
        n = round(ratio)
        if n >= 2 and abs(t - n * u) <= TICK_MATCH_TOL:
            return int(n)
        return None
    if u == 0:
        return None
    ratio = t / u
    if ratio.denominator == 1 and ratio.numerator >= 2:
        return int(ratio)
    return None


def validate_levy(path: LevyPath, tol: float) -> LevyValidationReport:
    """Check start, increment law, and marginal divisibility over the ticks.

    Scans pairs in increasing lexicographic order and keeps the first
    occurrence of the worst violation, so reports are deterministic.
    """
    ticks = path.timeline.ticks
    marg = path.marginals
    zero = certified_zero(path.structure)
    start_error = tv_distance(marg[0], dirac(path.structure, zero))

    worst_inc, inc_at, inc_checked = 0.0, None, 0
    for i in range(len(ticks)):
        for j in range(i, len(ticks)):
            k = path.timeline.locate(ticks[i] + ticks[j])
            if k is None:
                continue
            inc_checked += 1
            v = tv_distance(marg[k], convolve(marg[i], marg[j]))
            if v > worst_inc:
                worst_inc, inc_at = v, (float(ticks[i]), float(ticks[j]))

    worst_div, div_at, div_checked = 0.0, None, 0
    for i in range(len(ticks)):
        for j in range(i + 1, len(ticks)):
            n = _tick_ratio(ticks[j], ticks[i], path.timeline.kind)
            if n is None:
                continue
            div_checked += 1
            v = tv_distance(conv_power(marg[i], n), marg[j])
            if v > worst_div:
                worst_div, div_at = v, (float(ticks[j]), n)

    report = LevyValidationReport(
        tol=float(tol),
        start_error=start_error,
        worst_increment=worst_inc,
        increment_at=inc_at,
        increments_checked=inc_checked,
        worst_division=worst_div,
        division_at=div_at,
        divisions_checked=div_checked,
    )
    path.validation = report
    return report


def restrict_path(path: LevyPath, timeline: Timeline) -> LevyPath:
    """The same process seen on a sub-timeline of the original ticks."""
    picked = []
    for t in timeline.ticks:
        k = path.timeline.locate(t if path.timeline.kind != SAMPLES else float(t))
        if k is None:
            raise TimelineError(f"tick {t} is not a tick of the original path")
        picked.append(path.marginals[k])
    return LevyPath(timeline, tuple(picked), dict(path.generator))


def compare_paths(a: LevyPath, b: LevyPath) -> tuple[float, float | None]:
    """Largest tick-wise total variation between two paths on equal timelines."""
    if not same_structure(a.structure, b.structure):
        raise StructureMismatchError("paths live on different structures")
    if len(a.timeline) != len(b.timeline):
        raise TimelineError("paths have different timelines")
    for s, t in zip(a.timeline.ticks, b.timeline.ticks):
        if abs(float(s) - float(t)) > TICK_MATCH_TOL:
            raise TimelineError("paths have different timelines")
    worst, at = 0.0, None
    for k, t in enumerate(a.timeline.ticks):
        v = tv_distance(a.marginals[k], b.marginals[k])
        if v > worst:
            worst, at = v, float(t)
    return worst, at


# --- CSV interchange --------------------------------------------------------

def export_path(path: LevyPath) -> str:
    """CSV with one row per tick, weights at 17 significant digits."""
    m = path.structure.size
    lines = [
        "# generator: " + json.dumps(path.generator, sort_keys=True),
        f"# structure: size={m} fingerprint={path.structure.fingerprint}",
        "t," + ",".join(f"w_{i}" for i in range(m)),
    ]
    for t, mu in zip(path.timeline.ticks, path.marginals):
        row = [format(float(t), ".17g")] + [format(float(w), ".17g") for w in mu.weights]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_path_csv(text: str, structure) -> LevyPath:
    """Rebuild a path from export_path output; weights round-trip bit-exactly."""
    generator: dict = {}
    ticks: list[float] = []
    rows: list[Measure] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("generator:"):
                generator = json.loads(body[len("generator:"):])
            continue
        if line.startswith("t,"):
            continue
        cells = line.split(",")
        if len(cells) != structure.size + 1:
            raise TimelineError(
                f"row has {len(cells) - 1} weights, structure has {structure.size} elements"
            )
        ticks.append(float(cells[0]))
        w = np.array([float(c) for c in cells[1:]])
        # exported weights are already normalized; keep their exact bits
        rows.append(Measure(w, structure))
    if not rows:
        raise TimelineError("no data rows in path CSV")
    timeline = Timeline(SAMPLES, tuple(ticks))
    return LevyPath(timeline, tuple(rows), generator)

"""Closed-form expectations of the room-based rumor process.

All quantities here are deterministic functions of the parameters. Believer
counts may be real-valued (iterated expectations are never rounded), so the
binomial coefficients are evaluated as falling-factorial polynomials.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom

from .core import ModelParams, ParamError, check_believers

ROOT_TOL = 1e-10
STABILITY_HALF_WIDTH = 1e-6


def _falling_ratio(top: float, bottom: int, k: int) -> float:
    """prod_{i<k} max(top - i, 0) / (bottom - i); every factor is <= 1 when top <= bottom."""
    out = 1.0
    for i in range(k):
        num = top - i
        if num <= 0.0:
            return 0.0
        out *= num / (bottom - i)
    return out


def conversion_probability(n: float, params: ModelParams) -> float:
    """Probability that a given indifferent Other shares its room with >= m Believers.

    Hypergeometric tail over the ``r - 1`` roommates drawn from the other
    ``N - 1`` agents, ``n`` of whom believe::

        sum_{j>=m} C(n, j) C(N-1-n, r-1-j) / C(N-1, r-1)

    Each term is rewritten as ``C(r-1, j) [n]_j [N-1-n]_{r-1-j} / [N-1]_{r-1}``
    and accumulated as a product of factors in [0, 1], so nothing overflows
    at N = 10**7. Any ``0 <= n <= (1-b)N`` is accepted; below m the result is 0.
    """
    check_believers(n, params, lower=0)
    N, m, k = params.N, params.m, params.r - 1
    if n < m:
        return 0.0
    rest = (N - 1) - n
    total = 0.0
    for j in range(m, k + 1):
        # [n]_j over the first j falling factors of N-1, [rest]_{k-j} over the next k-j
        head = _falling_ratio(n, N - 1, j)
        if head == 0.0:
            break
        tail = _falling_ratio(rest, N - 1 - j, k - j)
        total += math.comb(k, j) * head * tail
    return min(max(total, 0.0), 1.0)


def expected_next(n: float, params: ModelParams) -> float:
    """Expected believer count after one round, given ``n`` believers now."""
    check_believers(n, params)
    s, d = params.s, params.d
    p = conversion_probability(n, params)
    return s + (n - s) * (1.0 - d) + (params.max_believers - n) * p


def drift(n: float, params: ModelParams) -> float:
    return expected_next(n, params) - n


@dataclass(frozen=True)
class Trajectory:
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def first_round_at_or_below(self, level: float) -> int | None:
        for t, v in enumerate(self.values):
            if v <= level:
                return t
        return None

    def first_round_at_or_above(self, level: float) -> int | None:
        for t, v in enumerate(self.values):
            if v >= level:
                return t
        return None


def expectation_trajectory(N0: float, params: ModelParams, T: int) -> Trajectory:
    """Iterate ``n -> expected_next(n)`` for ``T`` rounds from ``N0``.

    This is the mean-map iteration (E[f(n)] replaced by f(E[n])), the usual
    deterministic approximation of the expected believer curve.
    """
    check_believers(N0, params)
    if T < 0:
        raise ParamError("rounds", f"T must be >= 0, got {T}")
    values = [float(N0)]
    lo, hi = params.s, params.max_believers
    for _ in range(T):
        nxt = expected_next(values[-1], params)
        # guard against the last ulp drifting outside the state space
        values.append(min(max(nxt, lo), hi))
    return Trajectory(tuple(values))


def die_out_round(traj: Trajectory, params: ModelParams, margin: float = 1.0) -> int | None:
    """First round whose expected count is <= s + margin.

    The mean map never reaches s exactly because Seeds keep a tiny
    conversion probability, hence the margin.
    """
    return traj.first_round_at_or_below(params.s + margin)


# ---------------------------------------------------------------------------
# density-level mean-field maps


class MapKind(str, enum.Enum):
    M1R2 = "m1r2"
    M2R3 = "m2r3"
    GENERAL_BINOMIAL = "general_binomial"


class Stability(str, enum.Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    # tangent root, only at a zero discriminant
    SEMI_STABLE = "semi_stable"


def map_kind(params: ModelParams, *, allow_extension: bool = False) -> MapKind:
    if (params.m, params.r) == (1, 2):
        return MapKind.M1R2
    if (params.m, params.r) == (2, 3):
        return MapKind.M2R3
    if allow_extension:
        return MapKind.GENERAL_BINOMIAL
    raise ParamError(
        "unsupported_map",
        f"closed-form mean-field map exists only for (m, r) in {{(1, 2), (2, 3)}}, "
        f"got ({params.m}, {params.r})",
    )


def mean_field_map(P: float, params: ModelParams, *, allow_extension: bool = False) -> float:
    """Next-round believer density under independent-seat approximation.

    (m=1, r=2): (1-d)P + (1-b-P)P; (m=2, r=3): (1-d)P + (1-b-P)P^2.
    With ``allow_extension`` any (m, r) uses
    (1-d)P + (1-b-P) * Pr[Binomial(r-1, P) >= m], which reduces to the two
    closed forms above.
    """
    b, d = params.b, params.d
    if not 0.0 <= P <= 1.0 - b:
        raise ParamError("density_range", f"density {P} outside [0, {1.0 - b}]")
    kind = map_kind(params, allow_extension=allow_extension)
    if kind is MapKind.M1R2:
        gain = P
    elif kind is MapKind.M2R3:
        gain = P * P
    else:
        gain = float(binom.sf(params.m - 1, params.r - 1, P))
    return (1.0 - d) * P + (1.0 - b - P) * gain


@dataclass(frozen=True)
class FixedPointReport:
    map_kind: MapKind
    fixed_points: tuple[float, ...]
    stability: tuple[Stability, ...]
    notes: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "map_kind": self.map_kind.value,
            "fixed_points": list(self.fixed_points),
            "stability": [s.value for s in self.stability],
            "notes": list(self.notes),
        }


ERRATUM_NOTE = (
    "P1 uses the minus branch of the quadratic root; printed sources that give "
    "identical expressions for P1 and P2 are in error"
)
EXTENSION_NOTE = "general binomial map: extension beyond the two closed-form cases"


def _classify(g, P: float, upper: float) -> Stability:
    h = STABILITY_HALF_WIDTH
    left = g(max(P - h, 0.0))
    right = g(min(P + h, upper))
    if left > 0 and right < 0:
        return Stability.ATTRACTING
    if left < 0 and right > 0:
        return Stability.REPELLING
    return Stability.SEMI_STABLE


def mean_field_fixed_points(params: ModelParams, *, allow_extension: bool = False) -> FixedPointReport:
    """Interior fixed points of the mean-field map on (0, 1-b) and their stability."""
    kind = map_kind(params, allow_extension=allow_extension)
    b, d = params.b, params.d
    upper = 1.0 - b

    def g(P: float) -> float:
        return mean_field_map(P, params, allow_extension=allow_extension) - P

    notes: list[str] = []
    if kind is MapKind.M1R2:
        roots = [upper - d] if 0.0 < upper - d < upper else []
    elif kind is MapKind.M2R3:
        notes.append(ERRATUM_NOTE)
        disc = upper * upper - 4.0 * d
        if disc < 0:
            roots = []
        elif disc == 0:
            roots = [upper / 2.0]
        else:
            sq = math.sqrt(disc)
            # stable product form for the small root avoids cancellation
            big = (upper + sq) / 2.0
            roots = [d / big, big]
        roots = [P for P in roots if 0.0 < P < upper]
    else:
        notes.append(EXTENSION_NOTE)
        roots = _bracketed_roots(g, upper)
    stab = tuple(_classify(g, P, upper) for P in roots)
    return FixedPointReport(kind, tuple(roots), stab, tuple(notes))


def _bracketed_roots(g, upper: float, grid: int = 4000) -> list[float]:
    xs = np.linspace(0.0, upper, grid + 1)[1:-1]
    vals = [g(x) for x in xs]
    roots = []
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(float(x0))
        elif v0 * v1 < 0:
            roots.append(brentq(g, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots

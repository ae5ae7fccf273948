"""Model parameters, population census and run outcomes.

Every other module works on role *counts* rather than per-agent rosters:
the dynamics depend only on how many Seeds, Agnostics, believing Others and
indifferent Others there are.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping


class ParamError(ValueError):
    """Raised when a parameter bundle or a believer count is not admissible.

    ``code`` identifies which constraint was violated so callers (and the CLI)
    can react to each one distinctly.
    """

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter bundle. Build it with :func:`validate`."""

    N: int
    s: int
    b: float
    d: float
    m: int
    r: int
    agnostics: int

    @property
    def n_rooms(self) -> int:
        return self.N // self.r

    @property
    def max_believers(self) -> int:
        """Seeds plus every Other, i.e. (1-b)N with the rounded agnostic count."""
        return self.N - self.agnostics

    @property
    def others(self) -> int:
        return self.N - self.s - self.agnostics

    @property
    def takeover_threshold(self) -> int:
        return math.ceil(self.N / 2)

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_RAW_KEYS = ("N", "s", "b", "d", "m", "r")


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ParamError("type", f"{name} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ParamError("type", f"{name} must be an integer, got {value!r}")
        value = int(value)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParamError("type", f"{name} must be an integer, got {value!r}") from None


def validate(raw: Mapping[str, Any] | ModelParams | None = None, *,
             require_divisible: bool = True, **kwargs: Any) -> ModelParams:
    """Check raw model inputs and return a :class:`ModelParams`.

    Accepts a mapping with keys ``N, s, b, d, m, r`` (or an existing bundle,
    or keyword arguments). The agnostic count is fixed here as ``round(b*N)``.
    An ``agnostics`` entry in the input is ignored and recomputed.

    ``require_divisible=False`` admits r not dividing N. The closed-form
    expectations never form rooms and stay well defined; the simulator
    re-checks with :func:`require_rooms`.
    """
    if isinstance(raw, ModelParams):
        raw = raw.as_dict()
    values = dict(raw or {})
    values.update(kwargs)
    missing = [k for k in _RAW_KEYS if k not in values]
    if missing:
        raise ParamError("missing", f"missing parameter(s): {', '.join(missing)}")

    N = _as_int("N", values["N"])
    s = _as_int("s", values["s"])
    m = _as_int("m", values["m"])
    r = _as_int("r", values["r"])
    try:
        b = float(values["b"])
        d = float(values["d"])
    except (TypeError, ValueError):
        raise ParamError("type", "b and d must be real numbers") from None

    for name, v in (("N", N), ("s", s), ("m", m), ("r", r)):
        if v < 1:
            raise ParamError("nonpositive", f"{name} must be a positive integer, got {v}")
    if not 0.0 < d < 1.0:
        raise ParamError("flip_rate", f"d must lie in (0, 1), got {d}")
    if not 0.0 <= b < 1.0:
        raise ParamError("agnostic_fraction", f"b must lie in [0, 1), got {b}")
    if r <= m:
        raise ParamError("room_size", f"room size r={r} must exceed threshold m={m}")
    if r > N:
        raise ParamError("room_size", f"room size r={r} exceeds community size N={N}")
    if s < m:
        raise ParamError("seeds", f"s={s} Seeds cannot reach threshold m={m}")
    if require_divisible and N % r:
        raise ParamError("divisibility", f"room size r={r} does not divide N={N}")
    agnostics = round(b * N)
    if s + agnostics > N:
        raise ParamError(
            "role_overflow", f"s={s} Seeds and {agnostics} Agnostics exceed N={N}"
        )
    return ModelParams(N=N, s=s, b=b, d=d, m=m, r=r, agnostics=agnostics)


def require_rooms(params: ModelParams) -> None:
    if params.N % params.r:
        raise ParamError("divisibility", f"room size r={params.r} does not divide N={params.N}")


def check_believers(n: float, params: ModelParams, *, lower: int | None = None) -> None:
    """Raise :class:`ParamError` unless ``lower <= n <= (1-b)N`` (``lower`` defaults to s)."""
    lo = params.s if lower is None else lower
    if not lo <= n <= params.max_believers:
        raise ParamError(
            "believers_range",
            f"believer count {n} outside [{lo}, {params.max_believers}]",
        )


@dataclass(frozen=True)
class Population:
    seeds: int
    other_believers: int
    agnostics: int
    other_indifferents: int

    @property
    def believers(self) -> int:
        return self.seeds + self.other_believers

    @property
    def total(self) -> int:
        return self.seeds + self.other_believers + self.agnostics + self.other_indifferents

    def with_believers(self, n: int) -> Population:
        """Same roles, with ``n`` believers in total (Seeds included)."""
        others = self.other_believers + self.other_indifferents
        ob = n - self.seeds
        if not 0 <= ob <= others:
            raise ParamError("believers_range", f"believer count {n} not reachable")
        return Population(self.seeds, ob, self.agnostics, others - ob)


def initial_population(params: ModelParams, N0: int) -> Population:
    """Census with ``N0`` believers: all Seeds plus ``N0 - s`` Others."""
    if isinstance(N0, float) and N0.is_integer():
        N0 = int(N0)
    if not isinstance(N0, int) or isinstance(N0, bool):
        raise ParamError("type", f"N0 must be an integer, got {N0!r}")
    check_believers(N0, params)
    return Population(
        seeds=params.s,
        other_believers=N0 - params.s,
        agnostics=params.agnostics,
        other_indifferents=params.N - N0 - params.agnostics,
    )


class OutcomeKind(str, enum.Enum):
    TOOK_OVER = "took_over"
    DIED_OUT = "died_out"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class RunOutcome:
    kind: OutcomeKind
    rounds: int
    final_believers: int

    def as_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "rounds": self.rounds,
                "final_believers": self.final_believers}

"""Seeded Monte Carlo simulation of the room-based rumor process.

A round: agents are split uniformly at random into N/r rooms of size r;
every indifferent Other sharing a room with at least m Believers (counted at
the start of the round) converts; independently, every Other that believed at
the start of the round flips to Indifferent with probability d.

Random streams
--------------
All randomness comes from :class:`numpy.random.Generator` over PCG64. A run
with integer seed ``seed`` uses ``SeedSequence(seed)``; trial ``i`` of an
ensemble with base seed ``base`` uses ``SeedSequence(base, spawn_key=(i,))``,
which is the ``i``-th child of ``SeedSequence(base).spawn(...)``. Within a
round the room draw comes before the flip draw.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from .analytic import conversion_probability
from .core import (ModelParams, OutcomeKind, Population, RunOutcome, initial_population,
                   require_rooms)

Method = Literal["shuffle", "hypergeometric"]
METHODS = ("shuffle", "hypergeometric")
WORKERS_ENV = "MRUMOR_WORKERS"

# conversions expected from the Seeds alone below this are treated as none
QUIET_SEED_CONVERSIONS = 1e-3

DIED_OUT_RULE = (
    "died_out when the believer count equals s and either expected conversions "
    f"from Seeds alone are below {QUIET_SEED_CONVERSIONS:g} or the count has "
    "equalled s for r consecutive rounds (a convention: Seeds sharing a room "
    "can still convert when s >= m)"
)

_B, _I, _A = 0, 1, 2


@dataclass(frozen=True, eq=False)
class RoomCensus:
    """Per-room role counts; arrays of length N/r."""

    believers: np.ndarray
    other_indifferents: np.ndarray
    agnostics: np.ndarray
    r: int

    def converted(self, m: int) -> int:
        return int(self.other_indifferents[self.believers >= m].sum())


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(trial,))


def _role_array(pop: Population) -> np.ndarray:
    return np.repeat(
        np.array([_B, _I, _A], dtype=np.int8),
        [pop.believers, pop.other_indifferents, pop.agnostics],
    )


def assign_rooms(pop: Population, r: int, rng: np.random.Generator,
                 method: Method = "shuffle") -> RoomCensus:
    """Uniform random partition of the population into labelled rooms of size r.

    ``shuffle`` permutes an N-length role array; ``hypergeometric`` draws the
    believers' seats as a multivariate hypergeometric over rooms, then places
    the indifferent Others among the remaining seats. Both give the same law.
    """
    N = pop.total
    if N % r:
        raise ValueError(f"room size {r} does not divide population {N}")
    R = N // r
    if method == "shuffle":
        rooms = rng.permutation(_role_array(pop)).reshape(R, r)
        bel = (rooms == _B).sum(axis=1)
        ind = (rooms == _I).sum(axis=1)
    elif method == "hypergeometric":
        seats = np.full(R, r, dtype=np.int64)
        bel = rng.multivariate_hypergeometric(seats, pop.believers, method="marginals")
        ind = rng.multivariate_hypergeometric(seats - bel, pop.other_indifferents,
                                              method="marginals")
    else:
        raise ValueError(f"unknown room assignment method {method!r}")
    return RoomCensus(bel, ind, r - bel - ind, r)


def step(pop: Population, params: ModelParams, rng: np.random.Generator, *,
         method: Method = "shuffle", flips: bool = True) -> Population:
    """One synchronous round. ``flips=False`` disables the d-flips (test hook)."""
    census = assign_rooms(pop, params.r, rng, method)
    gained = census.converted(params.m)
    lost = int(rng.binomial(pop.other_believers, params.d)) if flips else 0
    ob = pop.other_believers - lost + gained
    return Population(pop.seeds, ob, pop.agnostics, pop.total - pop.seeds - pop.agnostics - ob)


def step_batch(pop: Population, params: ModelParams, rng: np.random.Generator,
               size: int, *, method: Method = "shuffle", flips: bool = True) -> np.ndarray:
    """Believer counts after one round for ``size`` independent rounds from ``pop``."""
    require_rooms(params)
    N, r, m = params.N, params.r, params.m
    R = N // r
    gained = np.empty(size, dtype=np.int64)
    if method == "shuffle":
        roles = _role_array(pop)
        chunk = max(1, 4_000_000 // N)
        for lo in range(0, size, chunk):
            hi = min(size, lo + chunk)
            rooms = rng.permuted(np.tile(roles, (hi - lo, 1)), axis=1).reshape(hi - lo, R, r)
            bel = (rooms == _B).sum(axis=2)
            ind = (rooms == _I).sum(axis=2)
            gained[lo:hi] = np.where(bel >= m, ind, 0).sum(axis=1)
    elif method == "hypergeometric":
        seats = np.full(R, r, dtype=np.int64)
        bel = rng.multivariate_hypergeometric(seats, pop.believers, size=size,
                                              method="marginals")
        for k in range(size):
            ind = rng.multivariate_hypergeometric(seats - bel[k], pop.other_indifferents,
                                                  method="marginals")
            gained[k] = ind[bel[k] >= m].sum()
    else:
        raise ValueError(f"unknown room assignment method {method!r}")
    lost = rng.binomial(pop.other_believers, params.d, size=size) if flips else 0
    return pop.believers - lost + gained


def default_max_rounds(N: int) -> int:
    return 50 * math.ceil(math.log2(N)) if N > 1 else 50


def run(params: ModelParams, N0: int, seed: int | np.random.SeedSequence,
        max_rounds: int | None = None, *, method: Method = "shuffle") -> RunOutcome:
    """Simulate from ``N0`` believers until takeover, die-out or ``max_rounds``."""
    require_rooms(params)
    if max_rounds is None:
        max_rounds = default_max_rounds(params.N)
    rng = make_rng(seed)
    pop = initial_population(params, N0)
    s = params.s
    quiet = conversion_probability(s, params) * (params.max_believers - s) < QUIET_SEED_CONVERSIONS
    streak = 0
    t = 0
    while True:
        n = pop.believers
        if n >= params.takeover_threshold:
            return RunOutcome(OutcomeKind.TOOK_OVER, t, n)
        if n == s:
            streak += 1
            if quiet or streak >= params.r:
                return RunOutcome(OutcomeKind.DIED_OUT, t, n)
        else:
            streak = 0
        if t >= max_rounds:
            return RunOutcome(OutcomeKind.TRUNCATED, t, n)
        pop = step(pop, params, rng, method=method)
        t += 1


@dataclass(frozen=True)
class EnsembleStats:
    trials: int
    took_over: int
    died_out: int
    truncated: int
    # kind -> (min, median, p95, max), None when no trial ended that way
    rounds_quantiles: dict[str, tuple[float, float, float, float] | None]
    seed: int

    def frequency(self, kind: OutcomeKind | str) -> float:
        return getattr(self, OutcomeKind(kind).value) / self.trials

    def as_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "took_over": self.took_over,
            "died_out": self.died_out,
            "truncated": self.truncated,
            "rounds_quantiles": {
                k: (list(v) if v is not None else None) for k, v in self.rounds_quantiles.items()
            },
            "seed": self.seed,
        }


def summarize(outcomes: list[RunOutcome], base_seed: int) -> EnsembleStats:
    counts = {k: 0 for k in OutcomeKind}
    rounds: dict[OutcomeKind, list[int]] = {k: [] for k in OutcomeKind}
    for o in outcomes:
        counts[o.kind] += 1
        rounds[o.kind].append(o.rounds)
    quant: dict[str, tuple[float, float, float, float] | None] = {}
    for k in OutcomeKind:
        xs = np.asarray(rounds[k], dtype=float)
        if xs.size:
            q = np.percentile(xs, [0, 50, 95, 100])
            quant[k.value] = tuple(float(v) for v in q)
        else:
            quant[k.value] = None
    return EnsembleStats(
        trials=len(outcomes),
        took_over=counts[OutcomeKind.TOOK_OVER],
        died_out=counts[OutcomeKind.DIED_OUT],
        truncated=counts[OutcomeKind.TRUNCATED],
        rounds_quantiles=quant,
        seed=base_seed,
    )


def _run_trials(params: ModelParams, N0: int, base_seed: int, trials: range,
                max_rounds: int | None, method: Method) -> list[RunOutcome]:
    return [run(params, N0, trial_seed(base_seed, i), max_rounds, method=method)
            for i in trials]


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def ensemble_outcomes(params: ModelParams, N0: int, trials: int, base_seed: int,
                      max_rounds: int | None = None, *, workers: int | None = None,
                      method: Method = "shuffle") -> list[RunOutcome]:
    """Outcomes of ``trials`` runs, in trial order whatever the worker count."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    workers = min(resolve_workers(workers), trials)
    if workers == 1:
        return _run_trials(params, N0, base_seed, range(trials), max_rounds, method)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_trials, *zip(*[
            (params, N0, base_seed, c, max_rounds, method) for c in chunks
        ]))
        return [o for part in parts for o in part]


def ensemble(params: ModelParams, N0: int, trials: int, base_seed: int,
             max_rounds: int | None = None, *, workers: int | None = None,
             method: Method = "shuffle") -> EnsembleStats:
    outcomes = ensemble_outcomes(params, N0, trials, base_seed, max_rounds,
                                 workers=workers, method=method)
    return summarize(outcomes, base_seed)

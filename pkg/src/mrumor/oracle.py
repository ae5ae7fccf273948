"""Exact small-N ground truth by exhaustive enumeration.

Nothing here shares code with :mod:`mrumor.analytic`; these routines count
configurations directly and return exact rationals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .core import ModelParams, ParamError, Population

CONVERSION_BUDGET_N = 24
ONE_STEP_BUDGET_N = 12
PERMUTATION_FORM_BUDGET_N = 200


@dataclass(frozen=True)
class ExactDistribution:
    support: tuple[int, ...]
    probabilities: tuple[Fraction, ...]

    def mean(self) -> Fraction:
        return sum((p * k for k, p in zip(self.support, self.probabilities)), Fraction(0))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(zip(self.support, self.probabilities))


def _budget(params: ModelParams, limit: int) -> None:
    if params.N > limit:
        raise ParamError("budget", f"N={params.N} exceeds enumeration budget {limit}")


@lru_cache(maxsize=None)
def _roommate_believer_table(N: int, r: int) -> tuple[tuple[int, ...], ...]:
    """table[n][j]: number of (r-1)-subsets of agents 0..N-2 holding exactly j of agents 0..n-1."""
    table = [[0] * r for _ in range(N)]
    for combo in itertools.combinations(range(N - 1), r - 1):
        for n in range(N):
            j = sum(1 for a in combo if a < n)
            table[n][j] += 1
    return tuple(tuple(row) for row in table)


def exact_conversion_probability(n: int, params: ModelParams) -> Fraction:
    """Fraction of roommate sets of a fixed indifferent agent holding >= m Believers.

    Agents other than the fixed one are labelled 0..N-2 and the first ``n`` of
    them are the Believers; every (r-1)-subset is listed explicitly.
    """
    _budget(params, CONVERSION_BUDGET_N)
    if not 0 <= n <= params.N - 1:
        raise ParamError("believers_range", f"believer count {n} outside [0, {params.N - 1}]")
    row = _roommate_believer_table(params.N, params.r)[n]
    return Fraction(sum(row[params.m:]), sum(row))


def permutation_count_probability(n: int, params: ModelParams) -> Fraction:
    """Conversion probability as a ratio of seat permutations, in exact integers.

    Fix the indifferent agent's seat (N ways), pick j >= m believing and
    r-1-j indifferent roommates, order the room (r-1)! and everyone else
    (N-r)!, then divide by all N! seatings.
    """
    _budget(params, PERMUTATION_FORM_BUDGET_N)
    N, r, m = params.N, params.r, params.m
    if not 0 <= n <= N - 1:
        raise ParamError("believers_range", f"believer count {n} outside [0, {N - 1}]")
    good = sum(math.comb(n, j) * math.comb(N - n - 1, r - j - 1) for j in range(m, r))
    numerator = N * good * math.factorial(r - 1) * math.factorial(N - r)
    return Fraction(numerator, math.factorial(N))


def _room_compositions(r: int):
    # (believers, indifferent Others, Agnostics) filling one room
    for b in range(r + 1):
        for i in range(r - b + 1):
            yield b, i, r - b - i


def exact_conversion_distribution(pop: Population, params: ModelParams) -> dict[int, Fraction]:
    """Exact law of the number of indifferent Others converted in one round.

    Enumerates the composition of each labelled room in turn. A sequence of
    room compositions is realised by prod_k r!/(b_k! i_k! a_k!) seatings of the
    role multiset, out of N!/(n! I! A!) in total.
    """
    _budget(params, ONE_STEP_BUDGET_N)
    if pop.total != params.N:
        raise ParamError("population", f"population totals {pop.total}, expected {params.N}")
    return dict(_conversion_law(params.r, params.m, pop.believers,
                                pop.other_indifferents, pop.agnostics))


@lru_cache(maxsize=4096)
def _conversion_law(r: int, m: int, n: int, ind: int, agn: int) -> tuple[tuple[int, Fraction], ...]:
    fact = math.factorial
    comps = [(c, fact(r) // (fact(c[0]) * fact(c[1]) * fact(c[2]))) for c in _room_compositions(r)]

    # (believers left, indifferents left, agnostics left, converted) -> seatings
    states: dict[tuple[int, int, int, int], int] = {(n, ind, agn, 0): 1}
    for _ in range((n + ind + agn) // r):
        nxt: dict[tuple[int, int, int, int], int] = {}
        for (bl, il, al, conv), w in states.items():
            for (cb, ci, ca), ways in comps:
                if cb > bl or ci > il or ca > al:
                    continue
                key = (bl - cb, il - ci, al - ca, conv + (ci if cb >= m else 0))
                nxt[key] = nxt.get(key, 0) + w * ways
        states = nxt

    total = fact(n + ind + agn) // (fact(n) * fact(ind) * fact(agn))
    dist: dict[int, int] = {}
    for (bl, il, al, conv), w in states.items():
        assert bl == il == al == 0
        dist[conv] = dist.get(conv, 0) + w
    assert sum(dist.values()) == total
    return tuple((k, Fraction(v, total)) for k, v in sorted(dist.items()))


def exact_one_step_distribution(pop: Population, params: ModelParams) -> ExactDistribution:
    """Exact law of the believer count after one round from ``pop``.

    Conversions (which only touch indifferent Others) are convolved with the
    independent flips of the Others who believed at the start of the round.
    """
    conv = exact_conversion_distribution(pop, params)
    d = Fraction(params.d)
    keep = pop.other_believers
    kept = {
        k: math.comb(keep, k) * (1 - d) ** k * d ** (keep - k) for k in range(keep + 1)
    }
    out: dict[int, Fraction] = {}
    for c, pc in conv.items():
        for k, pk in kept.items():
            n = pop.seeds + k + c
            out[n] = out.get(n, Fraction(0)) + pc * pk
    support = tuple(sorted(out))
    return ExactDistribution(support, tuple(out[k] for k in support))

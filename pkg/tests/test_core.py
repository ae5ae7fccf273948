import pytest
from hypothesis import given, strategies as st

from mrumor.core import (
    ModelParams,
    OutcomeKind,
    ParamError,
    Population,
    RunOutcome,
    initial_population,
    validate,
)

SMALL = dict(N=16, s=2, b=0.25, d=0.1, m=2, r=4)


def test_small_parameters_are_valid():
    p = validate(SMALL)
    assert p.agnostics == 4
    assert p.max_believers == 12
    assert p.n_rooms == 4
    assert p.others == 10


@pytest.mark.parametrize(
    "raw, code",
    [
        (dict(N=10, s=1, b=0, d=0.1, m=1, r=3), "divisibility"),
        (dict(N=12, s=1, b=0, d=0.1, m=2, r=3), "seeds"),
        (dict(N=12, s=2, b=0, d=0.1, m=2, r=2), "room_size"),
        (dict(N=12, s=2, b=0, d=0.0, m=1, r=2), "flip_rate"),
        (dict(N=12, s=2, b=0, d=1.0, m=1, r=2), "flip_rate"),
        (dict(N=12, s=2, b=1.0, d=0.1, m=1, r=2), "agnostic_fraction"),
        (dict(N=12, s=2, b=-0.1, d=0.1, m=1, r=2), "agnostic_fraction"),
        (dict(N=12, s=5, b=0.7, d=0.1, m=1, r=2), "role_overflow"),
        (dict(N=0, s=1, b=0, d=0.1, m=1, r=2), "nonpositive"),
        (dict(N=12, s=2, b=0, d=0.1, m=1), "missing"),
        (dict(N=12.5, s=2, b=0, d=0.1, m=1, r=2), "type"),
    ],
)
def test_each_violation_is_reported_distinctly(raw, code):
    with pytest.raises(ParamError) as exc:
        validate(raw)
    assert exc.value.code == code


def test_divisibility_can_be_relaxed_for_closed_forms():
    p = validate(N=10**6, s=100, b=0.25, d=0.1, m=1, r=3, require_divisible=False)
    assert p.agnostics == 250_000


def test_degenerate_corners_admitted():
    p = validate(N=12, s=2, b=0.0, d=0.1, m=2, r=3)
    assert p.agnostics == 0 and p.s == p.m


valid_raw = st.builds(
    lambda rooms, r, m, s, b, d: dict(N=rooms * r, s=s, b=b, d=d, m=m, r=r),
    rooms=st.integers(1, 50),
    r=st.integers(2, 6),
    m=st.integers(1, 5),
    s=st.integers(1, 10),
    b=st.floats(0, 0.9),
    d=st.floats(0.001, 0.999),
)


@given(valid_raw)
def test_validate_is_idempotent(raw):
    try:
        p = validate(raw)
    except ParamError:
        return
    assert validate(p) == p
    assert validate(p.as_dict()) == p


def test_initial_population_examples():
    p = validate(SMALL)
    assert initial_population(p, 2) == Population(2, 0, 4, 10)
    assert initial_population(p, 12) == Population(2, 10, 4, 0)
    with pytest.raises(ParamError):
        initial_population(p, 13)
    with pytest.raises(ParamError):
        initial_population(p, 1)


@given(st.integers(2, 12))
def test_population_totals(N0):
    p = validate(SMALL)
    pop = initial_population(p, N0)
    assert pop.total == p.N
    assert pop.believers == N0
    assert pop.with_believers(5).total == p.N


def test_run_outcome_dict():
    o = RunOutcome(OutcomeKind.DIED_OUT, 7, 2)
    assert o.as_dict() == {"kind": "died_out", "rounds": 7, "final_believers": 2}


def test_params_are_immutable():
    p = validate(SMALL)
    with pytest.raises(AttributeError):
        p.N = 20
    assert isinstance(p, ModelParams)

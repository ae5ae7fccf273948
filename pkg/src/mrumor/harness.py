"""Experiment commands: configuration, evaluation and CSV/JSON rendering.

Each ``cmd_*`` function takes a :class:`RunConfig` and returns a
:class:`Table`; :func:`render` turns it into CSV or JSON. JSON documents carry
``schema_version`` and the full configuration so any artifact can be re-run
from its own output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analytic, sim
from .core import ModelParams, ParamError, initial_population, require_rooms, validate

SCHEMA_VERSION = 1
U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration (CLI exit code 2)."""


class BudgetError(RuntimeError):
    """A guard rail on work size tripped (CLI exit code 3)."""


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    N0: int | str | None = None
    T: int = 20
    trials: int = 200
    seed: int = 0
    max_rounds: int | None = None
    method: str = "shuffle"
    n_min: float | None = None
    n_max: float | None = None
    points: int = 200
    grid_N0: tuple[int | str, ...] = ()
    grid_m: tuple[int, ...] = ()
    grid_d: tuple[float, ...] = ()
    grid_b: tuple[float, ...] = ()
    max_cells: int = 256
    extension: bool = False
    format: str = "json"

    @classmethod
    def from_flat(cls, raw: Mapping[str, Any]) -> RunConfig:
        raw = dict(raw)
        try:
            # divisibility is enforced by the simulation commands only
            params = validate({k: raw[k] for k in ("N", "s", "b", "d", "m", "r") if k in raw},
                              require_divisible=False)
        except ParamError as exc:
            raise ConfigError(str(exc)) from exc
        known = {f.name for f in fields(cls)} - {"params"}
        unknown = set(raw) - known - {"N", "s", "b", "d", "m", "r", "agnostics", "schema_version"}
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
        kw: dict[str, Any] = {k: raw[k] for k in known if raw.get(k) is not None}
        try:
            for k in ("grid_N0", "grid_m", "grid_d", "grid_b"):
                if k in kw:
                    kw[k] = tuple(kw[k])
            kw["grid_m"] = tuple(int(v) for v in kw.get("grid_m", ()))
            kw["grid_d"] = tuple(float(v) for v in kw.get("grid_d", ()))
            kw["grid_b"] = tuple(float(v) for v in kw.get("grid_b", ()))
            for k in ("T", "trials", "points", "max_cells", "max_rounds"):
                if k in kw:
                    kw[k] = _strict_int(k, kw[k])
            if "seed" in kw:
                kw["seed"] = int(kw["seed"])
            for k in ("n_min", "n_max"):
                if k in kw:
                    kw[k] = float(kw[k])
            if "extension" in kw and not isinstance(kw["extension"], bool):
                raise ConfigError("extension must be true or false")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed configuration value: {exc}") from exc
        cfg = cls(params=params, **kw)
        cfg.check()
        return cfg

    def check(self) -> None:
        if not 0 <= self.seed <= U64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.method not in sim.METHODS:
            raise ConfigError(f"method must be one of {sim.METHODS}, got {self.method!r}")
        for name in ("T", "points"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.max_rounds is not None and self.max_rounds < 0:
            raise ConfigError("max_rounds must be >= 0")

    def to_flat(self) -> dict[str, Any]:
        out: dict[str, Any] = self.params.as_dict()
        for f in fields(self):
            if f.name == "params":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _strict_int(name: str, v: Any) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return int(v)


# ---------------------------------------------------------------------------
# flat TOML documents


def loads_config(text: str) -> dict[str, Any]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat key-value, found table(s): {nested}")
    return data


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        # TOML integers are signed 64-bit
        return str(v) if v < 2**63 else json.dumps(str(v))
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} in config")
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to config")


def dumps_config(flat: Mapping[str, Any]) -> str:
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in flat.items() if v is not None)


# ---------------------------------------------------------------------------
# tables


@dataclass
class Table:
    command: str
    columns: list[str]
    rows: list[list[Any]]
    config: RunConfig
    extra: dict[str, Any] = field(default_factory=dict)
    # columns rendered with 4 decimals in CSV
    percent_columns: tuple[str, ...] = ()

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def render(table: Table, fmt: str | None = None) -> str:
    fmt = fmt or table.config.format
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": table.command,
            "config": table.config.to_flat(),
            **table.extra,
            "columns": table.columns,
            "rows": table.records(),
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        pct = {table.columns.index(c) for c in table.percent_columns}
        for row in table.rows:
            w.writerow([_csv_cell(v, i in pct) for i, v in enumerate(row)])
        return buf.getvalue()
    raise ConfigError(f"unknown output format {fmt!r}")


def _csv_cell(v: Any, percent: bool) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}" if percent else repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_csv_cell(x, percent) for x in v)
    return str(v)


def _require_n0(cfg: RunConfig) -> int:
    if cfg.N0 is None:
        raise ConfigError("N0 is required for this command")
    return resolve_n0(cfg.N0, cfg.params)


def resolve_n0(token: int | float | str, params: ModelParams) -> int:
    """Initial believer count from ``500``, ``"s"`` or a fraction of N like ``"0.05N"``."""
    if isinstance(token, str):
        t = token.strip()
        if t == "s":
            return params.s
        if t.endswith("N"):
            try:
                return round(float(t[:-1]) * params.N)
            except ValueError:
                raise ConfigError(f"bad N0 token {token!r}") from None
        try:
            token = float(t)
        except ValueError:
            raise ConfigError(f"bad N0 token {token!r}") from None
    if isinstance(token, float):
        if not token.is_integer():
            raise ConfigError(f"N0 must be an integer, got {token}")
        token = int(token)
    return int(token)


# ---------------------------------------------------------------------------
# commands


def cmd_expect(cfg: RunConfig) -> Table:
    """f(n) and its drift on a log-spaced grid of believer counts."""
    p = cfg.params
    lo = p.s if cfg.n_min is None else cfg.n_min
    hi = min(p.N / 2, p.max_believers) if cfg.n_max is None else cfg.n_max
    if cfg.points and not (p.s <= lo <= hi <= p.max_believers):
        raise ConfigError(f"grid [{lo}, {hi}] must lie within [{p.s}, {p.max_believers}]")
    grid = np.geomspace(lo, hi, cfg.points) if cfg.points else np.empty(0)
    rows = []
    for n in grid:
        n = float(n)
        f = analytic.expected_next(n, p)
        rows.append([n, f, f - n])
    return Table("expect", ["n", "f_n", "drift"], rows, cfg)


def cmd_trajectory(cfg: RunConfig) -> Table:
    p = cfg.params
    N0 = _require_n0(cfg)
    try:
        traj = analytic.expectation_trajectory(N0, p, cfg.T)
    except ParamError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [[t, v, 100.0 * v / p.N] for t, v in enumerate(traj.values)]
    extra = {
        "die_out_round": analytic.die_out_round(traj, p),
        "die_out_level": p.s + 1.0,
        "note": "deterministic iteration of the expected-next map",
    }
    return Table("trajectory", ["t", "expected_believers", "expected_pct"], rows, cfg,
                 extra, percent_columns=("expected_pct",))


def _checked_n0(cfg: RunConfig, N0: int, params: ModelParams | None = None) -> int:
    params = params or cfg.params
    try:
        require_rooms(params)
        initial_population(params, N0)
    except ParamError as exc:
        raise ConfigError(str(exc)) from exc
    return N0


def cmd_simulate(cfg: RunConfig) -> Table:
    N0 = _checked_n0(cfg, _require_n0(cfg))
    out = sim.run(cfg.params, N0, cfg.seed, cfg.max_rounds, method=cfg.method)
    return Table("simulate", ["kind", "rounds", "final_believers"],
                 [[out.kind.value, out.rounds, out.final_believers]], cfg,
                 {"died_out_rule": sim.DIED_OUT_RULE})


_QUANT_KINDS = ("took_over", "died_out", "truncated")


def _ensemble_row(stats: sim.EnsembleStats) -> list[Any]:
    row: list[Any] = [stats.trials, stats.took_over, stats.died_out, stats.truncated,
                      100.0 * stats.took_over / stats.trials]
    for k in _QUANT_KINDS:
        q = stats.rounds_quantiles[k]
        row.extend(q if q is not None else (None,) * 4)
    return row


_ENSEMBLE_COLUMNS = ["trials", "took_over", "died_out", "truncated", "takeover_pct"] + [
    f"{k}_rounds_{q}" for k in _QUANT_KINDS for q in ("min", "median", "p95", "max")
]


def cmd_ensemble(cfg: RunConfig, *, workers: int | None = None) -> Table:
    N0 = _checked_n0(cfg, _require_n0(cfg))
    stats = sim.ensemble(cfg.params, N0, cfg.trials, cfg.seed, cfg.max_rounds,
                         workers=workers, method=cfg.method)
    return Table("ensemble", list(_ENSEMBLE_COLUMNS), [_ensemble_row(stats)], cfg,
                 {"died_out_rule": sim.DIED_OUT_RULE},
                 percent_columns=("takeover_pct",))


def _mf_threshold(params: ModelParams) -> float | None:
    """Smallest repelling interior density of the (possibly extended) mean-field map."""
    rep = analytic.mean_field_fixed_points(params, allow_extension=True)
    for P, st in zip(rep.fixed_points, rep.stability):
        if st is analytic.Stability.REPELLING:
            return P
    return None


def cmd_sweep(cfg: RunConfig, *, workers: int | None = None) -> Table:
    """Ensemble takeover frequency over a grid of N0, m, d and b."""
    p = cfg.params
    n0_tokens = cfg.grid_N0 or ((cfg.N0,) if cfg.N0 is not None else ())
    if not n0_tokens:
        raise ConfigError("sweep needs N0 or grid_N0")
    ms = cfg.grid_m or (p.m,)
    ds = cfg.grid_d or (p.d,)
    bs = cfg.grid_b or (p.b,)
    cells = len(n0_tokens) * len(ms) * len(ds) * len(bs)
    if cells > cfg.max_cells:
        raise BudgetError(f"sweep has {cells} cells, above max_cells={cfg.max_cells}")

    rows = []
    for m in ms:
        for d in ds:
            for b in bs:
                try:
                    cp = validate(p, m=m, d=d, b=b, require_divisible=False)
                except ParamError as exc:
                    raise ConfigError(f"grid cell m={m}, d={d}, b={b}: {exc}") from exc
                thr = _mf_threshold(cp)
                for tok in n0_tokens:
                    N0 = _checked_n0(cfg, resolve_n0(tok, cp), cp)
                    st = sim.ensemble(cp, N0, cfg.trials, cfg.seed, cfg.max_rounds,
                                      workers=workers, method=cfg.method)
                    rows.append([N0, m, d, b, cp.r, st.trials, st.took_over, st.died_out,
                                 st.truncated, 100.0 * st.took_over / st.trials,
                                 100.0 * st.died_out / st.trials, thr])
    cols = ["N0", "m", "d", "b", "r", "trials", "took_over", "died_out", "truncated",
            "takeover_pct", "died_out_pct", "mf_threshold_density"]
    return Table("sweep", cols, rows, cfg,
                 {"died_out_rule": sim.DIED_OUT_RULE,
                  "mf_threshold_note": "smallest repelling mean-field density; "
                                       "null when the map has no interior repeller"},
                 percent_columns=("takeover_pct", "died_out_pct"))


def cmd_fixed_points(cfg: RunConfig) -> Table:
    try:
        rep = analytic.mean_field_fixed_points(cfg.params, allow_extension=cfg.extension)
    except ParamError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [[P, st.value] for P, st in zip(rep.fixed_points, rep.stability)]
    return Table("fixed-points", ["density", "stability"], rows, cfg,
                 {"map_kind": rep.map_kind.value, "notes": list(rep.notes)})


COMMANDS = {
    "expect": cmd_expect,
    "trajectory": cmd_trajectory,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "fixed-points": cmd_fixed_points,
}


def with_overrides(cfg: RunConfig, **changes: Any) -> RunConfig:
    """Copy of ``cfg`` with fields replaced; parameters are re-validated."""
    flat = cfg.to_flat()
    flat.update({k: v for k, v in changes.items()})
    return RunConfig.from_flat(flat)


__all__ = [
    "BudgetError", "COMMANDS", "ConfigError", "RunConfig", "SCHEMA_VERSION", "Table",
    "cmd_ensemble", "cmd_expect", "cmd_fixed_points", "cmd_simulate", "cmd_sweep",
    "cmd_trajectory", "dumps_config", "loads_config", "render", "resolve_n0", "with_overrides",
]

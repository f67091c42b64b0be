"""Command-line experiment runner with reproducible, diffable output.

Every subcommand is a thin adapter over one experiment in
:mod:`arrowlab.experiments`: it validates a configuration (defaults <
config file < explicit flags), runs the experiment with all randomness
derived from ``--seed``, and serializes a result record as CSV or JSON.
Metric rows are deterministic functions of the echoed configuration, so a
rerun with the same flags reproduces them byte for byte.

Exit codes: 0 success, 1 usage or configuration error, 2 when at least one
run invariant failed its tolerance (rows are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

from . import __version__, experiments
from .core import RNG_ALGORITHM

SCHEMA_VERSION = 1

LN3 = 1.0986122886681098


class ConfigError(ValueError):
    """Configuration rejected; carries the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"invalid value for {key!r}: {message}")
        self.key = key


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameter schemas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    key: str
    kind: str  # int | float | float_list | dims | choice | str
    default: object
    help: str
    choices: tuple[str, ...] = ()
    validate: Callable[[object], str | None] | None = None


def _check_trials(v) -> str | None:
    return None if v >= 1 else "must be >= 1"


def _check_epsilon(v) -> str | None:
    return None if 0.0 <= v <= 1.0 else "must lie in [0, 1]"


def _check_beta(v) -> str | None:
    return None if math.isfinite(v) and v > 0.0 else "must be finite and > 0"


def _check_dims(v) -> str | None:
    d_s, d_r = v
    if not (2 <= d_s <= 16 and 2 <= d_r <= 16):
        return "each factor must lie in [2, 16]"
    return None


def _check_collisions(v) -> str | None:
    return None if 1 <= v <= 11 else "must lie in [1, 11] (joint dimension cap 2^12)"


def _check_finite(v) -> str | None:
    return None if math.isfinite(v) else "must be finite"


def _check_positive(v) -> str | None:
    return None if math.isfinite(v) and v > 0.0 else "must be finite and > 0"


def _check_finite_list(v) -> str | None:
    return None if v and all(math.isfinite(x) for x in v) else "must be a non-empty finite list"


def _check_epsilon_list(v) -> str | None:
    if not v or not all(math.isfinite(x) and 0.0 <= x <= 1.0 for x in v):
        return "every value must lie in [0, 1]"
    return None


def _check_seed(v) -> str | None:
    return None if 0 <= v < 2**64 else "must be a 64-bit unsigned integer"


GLOBAL_PARAMS = (
    Param("seed", "int", 0, "root seed for all randomness", validate=_check_seed),
    Param("format", "choice", "csv", "output format", choices=("csv", "json")),
    Param("out", "str", "-", "output path, '-' for stdout"),
    Param("units", "choice", "nats", "display units for entropy-valued columns", choices=("nats", "bits")),
)

# entropy-valued columns per experiment and their power of nats, for the
# bits display conversion (schrodinger_product is a product of two entropies)
ENTROPY_COLUMNS: dict[str, dict[str, int]] = {
    "balance": {"ds_s": 1, "ds_r": 1, "sum": 1, "mi_initial": 1, "mi_final": 1, "balance_deviation": 1},
    "near-product": {
        "ds_s": 1,
        "ds_r": 1,
        "sum": 1,
        "mi_initial": 1,
        "mi_final": 1,
        "analytic_sum": 1,
        "sum_deviation": 1,
    },
    "decorrelate": {"ds_s": 1, "ds_r": 1, "sum": 1, "mi_initial": 1, "mi_final": 1},
    "search": {"mi_initial": 1, "achieved_sum": 1},
    "schrodinger": {"ds_s": 1, "ds_r": 1, "schrodinger_product": 2, "sum": 1},
    "sweep": {"sum": 1},
    "collide": {"entropy": 1},
    "crooks": {"kl_divergence": 1, "average_sigma": 1, "identity_deviation": 1},
    "jarzynski": {},
    "heatflow": {"ds_s": 1, "ds_r": 1, "clausius_lhs": 1},
    "damping": {"heat": 1},
}

EXPERIMENT_PARAMS: dict[str, tuple[Param, ...]] = {
    "balance": (
        Param("trials", "int", 100, "number of random product inputs", validate=_check_trials),
        Param("dims", "dims", (2, 2), "bipartition as AxB, e.g. 2x2", validate=_check_dims),
    ),
    "near-product": (
        Param("epsilon", "float", 0.1, "mixing weight of the correlated part", validate=_check_epsilon),
    ),
    "decorrelate": (),
    "search": (
        Param("trials", "int", 20, "number of optimizer runs", validate=_check_trials),
        Param("restarts", "int", 4, "restarts per run (first is deterministic)", validate=_check_trials),
        Param("max-iter", "int", 300, "iteration budget per restart", validate=_check_trials),
        Param("min-mi", "float", 0.01, "mutual-information floor for random inputs", validate=_check_positive),
        Param("demo", "choice", "random", "input family", choices=("random", "near-product", "classical")),
        Param("epsilon", "float", 0.1, "epsilon for demo=near-product", validate=_check_epsilon),
    ),
    "schrodinger": (
        Param("trials", "int", 200, "number of random product inputs", validate=_check_trials),
        Param("dims", "dims", (2, 2), "bipartition as AxB", validate=_check_dims),
    ),
    "sweep": (
        Param("g-values", "float_list", (0.0, 0.25, 0.5, 1.0, 2.0), "coupling strengths", validate=_check_finite_list),
        Param("eps-values", "float_list", (0.0, 0.25, 0.5), "correlation strengths", validate=_check_epsilon_list),
        Param("t-values", "float_list", (0.5, 1.0, 2.0, 4.0), "evolution times", validate=_check_finite_list),
        Param("gap-s", "float", experiments.DEFAULT_GAP_S, "system qubit gap", validate=_check_finite),
        Param("gap-r", "float", experiments.DEFAULT_GAP_R, "rest qubit gap", validate=_check_finite),
    ),
    "collide": (
        Param("collisions", "int", 8, "number of fresh-ancilla collisions", validate=_check_collisions),
        Param("theta", "float", math.pi / 4.0, "partial-swap angle", validate=_check_finite),
        Param("beta", "float", LN3, "inverse temperature of the reservoir qubits", validate=_check_beta),
        Param("mode", "choice", "joint", "simulation mode", choices=("joint", "reduced")),
        Param("init", "choice", "excited", "initial system state", choices=("excited", "random")),
    ),
    "crooks": (
        Param("trials", "int", 100, "number of random protocols", validate=_check_trials),
        Param("beta", "float", 1.0, "inverse temperature", validate=_check_beta),
        Param("dims", "dims", (2, 2), "bipartition as AxB", validate=_check_dims),
    ),
    "jarzynski": (
        Param("trials", "int", 100, "number of random protocols", validate=_check_trials),
        Param("beta", "float", 1.0, "inverse temperature", validate=_check_beta),
        Param("dims", "dims", (2, 2), "bipartition as AxB", validate=_check_dims),
    ),
    "heatflow": (
        Param("trials", "int", 50, "number of random Gibbs pairs", validate=_check_trials),
    ),
    "damping": (
        Param("trials", "int", 10, "number of random states", validate=_check_trials),
        Param("beta", "float", LN3, "inverse temperature of the bath", validate=_check_beta),
    ),
}


def _parse_value(param: Param, raw: str):
    try:
        if param.kind == "int":
            return int(raw)
        if param.kind == "float":
            return float(raw)
        if param.kind == "float_list":
            return tuple(float(x) for x in raw.split(",") if x.strip() != "")
        if param.kind == "dims":
            parts = raw.lower().split("x")
            if len(parts) != 2:
                raise ValueError("expected AxB")
            return int(parts[0]), int(parts[1])
        if param.kind == "choice":
            if raw not in param.choices:
                raise ValueError(f"expected one of {', '.join(param.choices)}")
            return raw
        return raw
    except ValueError as exc:
        raise ConfigError(param.key, str(exc) or f"cannot parse {raw!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully defaulted parameters of one experiment run."""

    experiment: str
    values: dict
    schema_version: int = SCHEMA_VERSION

    def __getitem__(self, key: str):
        return self.values[key]


def parse_config_text(text: str) -> dict[str, str]:
    """'key = value' lines; '#' starts a comment; blank lines ignored."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def validate_config(experiment: str, raw_text: str = "", overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse, default and range-check one experiment configuration.

    ``raw_text`` is the optional config-file body; ``overrides`` are explicit
    flag values (highest precedence).  Unknown keys are rejected by name.
    """
    if experiment not in EXPERIMENT_PARAMS:
        raise UsageError(f"unknown experiment {experiment!r}")
    schema = {p.key: p for p in (*EXPERIMENT_PARAMS[experiment], *GLOBAL_PARAMS)}
    values = {p.key: p.default for p in schema.values()}
    for source in (parse_config_text(raw_text), overrides or {}):
        for key, raw in source.items():
            if key not in schema:
                raise ConfigError(key, f"unknown parameter for experiment {experiment!r}")
            values[key] = _parse_value(schema[key], raw)
    for param in schema.values():
        if param.validate is not None:
            message = param.validate(values[param.key])
            if message is not None:
                raise ConfigError(param.key, message)
    return ExperimentConfig(experiment=experiment, values=values)


# ---------------------------------------------------------------------------
# execution and serialization
# ---------------------------------------------------------------------------

@dataclass
class ResultRecord:
    experiment: str
    config: dict
    columns: list[str]
    rows: list[tuple]
    invariant_failures: list[str]
    extra: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    library_version: str = __version__
    rng_algorithm: str = RNG_ALGORITHM
    duration_seconds: float = 0.0


def _dispatch(config: ExperimentConfig):
    v = config.values
    name = config.experiment
    if name == "balance":
        return (*experiments.run_balance(v["trials"], v["dims"][0], v["dims"][1], v["seed"]), {})
    if name == "near-product":
        return (*experiments.run_near_product(v["epsilon"]), {})
    if name == "decorrelate":
        return (*experiments.run_decorrelate(), {})
    if name == "search":
        return (
            *experiments.run_search(
                v["trials"], v["restarts"], v["max-iter"], v["min-mi"], v["seed"], demo=v["demo"], epsilon=v["epsilon"]
            ),
            {},
        )
    if name == "schrodinger":
        return (*experiments.run_schrodinger(v["trials"], v["dims"][0], v["dims"][1], v["seed"]), {})
    if name == "sweep":
        planned = len(v["g-values"]) * len(v["eps-values"]) * len(v["t-values"])
        return (
            *experiments.run_sweep(v["g-values"], v["eps-values"], v["t-values"], gap_s=v["gap-s"], gap_r=v["gap-r"]),
            {"planned_cells": planned},
        )
    if name == "collide":
        columns, rows, failures, extra = experiments.run_collide(
            v["collisions"], v["theta"], v["beta"], v["seed"], mode=v["mode"], init=v["init"]
        )
        return columns, rows, failures, extra
    if name == "crooks":
        return (*experiments.run_crooks(v["trials"], v["beta"], v["dims"][0], v["dims"][1], v["seed"]), {})
    if name == "jarzynski":
        return (*experiments.run_jarzynski(v["trials"], v["beta"], v["dims"][0], v["dims"][1], v["seed"]), {})
    if name == "heatflow":
        return (*experiments.run_heatflow(v["trials"], v["seed"]), {})
    if name == "damping":
        return (*experiments.run_damping(v["trials"], v["beta"], v["seed"]), {})
    raise UsageError(f"unknown experiment {config.experiment!r}")


def _rows_in_bits(experiment: str, columns: list[str], rows: list[tuple]) -> list[tuple]:
    powers = ENTROPY_COLUMNS.get(experiment, {})
    scale = {i: math.log(2.0) ** powers[c] for i, c in enumerate(columns) if c in powers}
    if not scale:
        return rows
    return [tuple(v / scale[i] if i in scale else v for i, v in enumerate(row)) for row in rows]


def run(config: ExperimentConfig) -> tuple[int, ResultRecord]:
    """Execute one validated configuration; exit code 2 flags invariant failures."""
    start = time.perf_counter()
    columns, rows, failures, extra = _dispatch(config)
    if config["units"] == "bits":
        rows = _rows_in_bits(config.experiment, columns, rows)
    record = ResultRecord(
        experiment=config.experiment,
        config=dict(config.values),
        columns=columns,
        rows=rows,
        invariant_failures=failures,
        extra=extra,
        duration_seconds=time.perf_counter() - start,
    )
    return (2 if failures else 0), record


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _config_echo(experiment: str, config: dict) -> dict:
    """Echo values in the same text form the config file accepts."""
    kinds = {p.key: p.kind for p in (*EXPERIMENT_PARAMS[experiment], *GLOBAL_PARAMS)}
    out = {}
    for key, value in config.items():
        if kinds.get(key) == "dims":
            out[key] = f"{value[0]}x{value[1]}"
        elif isinstance(value, tuple):
            out[key] = ",".join(_format_cell(v) for v in value)
        else:
            out[key] = value
    return out


def serialize_csv(record: ResultRecord) -> str:
    buf = io.StringIO()
    meta = {
        "experiment": record.experiment,
        "schema_version": record.schema_version,
        "library_version": record.library_version,
        "rng_algorithm": record.rng_algorithm,
        "duration_seconds": record.duration_seconds,
    }
    for key, value in meta.items():
        buf.write(f"# {key}={_format_cell(value)}\n")
    for key, value in _config_echo(record.experiment, record.config).items():
        buf.write(f"# config.{key}={_format_cell(value)}\n")
    for key, value in record.extra.items():
        buf.write(f"# extra.{key}={_format_cell(value)}\n")
    buf.write(f"# invariant_failures={len(record.invariant_failures)}\n")
    for i, failure in enumerate(record.invariant_failures):
        buf.write(f"# failure.{i}={failure}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def serialize_json(record: ResultRecord) -> str:
    payload = {
        "metadata": {
            "experiment": record.experiment,
            "schema_version": record.schema_version,
            "library_version": record.library_version,
            "rng_algorithm": record.rng_algorithm,
            "duration_seconds": record.duration_seconds,
            "config": _config_echo(record.experiment, record.config),
            "extra": {k: (list(v) if isinstance(v, tuple) else v) for k, v in record.extra.items()},
            "invariant_failures": record.invariant_failures,
        },
        "columns": record.columns,
        "rows": [[(v.value if hasattr(v, "value") else v) for v in row] for row in record.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arrowlab", description="Entropy-balance and fluctuation experiments on small bipartite quantum systems.")
    sub = parser.add_subparsers(dest="experiment", metavar="experiment")
    for name, params in EXPERIMENT_PARAMS.items():
        p = sub.add_parser(name, help=f"run the {name} experiment", description=f"Run the {name} experiment.")
        for param in (*params, *GLOBAL_PARAMS):
            p.add_argument(f"--{param.key}", dest=param.key, default=None, metavar="V", help=f"{param.help} (default {_format_cell(param.default) if not isinstance(param.default, tuple) else ','.join(map(_format_cell, param.default))})")
        p.add_argument("--config", dest="config", default=None, metavar="PATH", help="optional key=value config file")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.experiment is None:
            raise UsageError("an experiment subcommand is required")
        raw_text = ""
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw_text = fh.read()
        overrides = {
            param.key: getattr(args, param.key)
            for param in (*EXPERIMENT_PARAMS[args.experiment], *GLOBAL_PARAMS)
            if getattr(args, param.key) is not None
        }
        config = validate_config(args.experiment, raw_text, overrides)
    except (UsageError, ConfigError) as exc:
        print(f"arrowlab: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"arrowlab: error: cannot read config: {exc}", file=sys.stderr)
        return 1

    code, record = run(config)
    text = serialize_csv(record) if config["format"] == "csv" else serialize_json(record)
    if config["out"] == "-":
        sys.stdout.write(text)
    else:
        with open(config["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    for failure in record.invariant_failures:
        print(f"arrowlab: invariant failure: {failure}", file=sys.stderr)
    return code


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()

"""Experiment specs, sweep execution, and CSV/JSON-lines emission.

A spec file is flat INI-style text with a top-level schema_version and three
sections:

    schema_version = 1

    [system]            # SystemConfig fields, scenario and scheme required
    scenario = fixed
    scheme = odwf
    K = 2000
    N = 2
    p = 1.0
    beta = 40

    [sweep]             # optional; numeric config fields -> value lists
    beta = 40, 80, 160, 320

    [output]            # optional
    mode = both         # simulate | predict | both
    format = csv        # csv | jsonl
    path = results.csv

Sweep points are the cross product of the axes in declaration order, last
axis fastest. Each point gets its own seed derived from (master seed, row
index), so rows are independent yet the whole table is reproducible byte for
byte. Blank lines and full-line comments (# or ;) are ignored.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from .analytics import (Prediction, baseline_fixed_prediction,
                        baseline_mobile_prediction, odwf_fixed_prediction,
                        odwf_mobile_prediction)
from .engine import (BASELINE, FIXED, MOBILE, ODWF, SystemConfig,
                     resolve_warmup, run_replicated)
from .protocol import BufferOverflowError

SCHEMA_VERSION = 1
MODES = ("simulate", "predict", "both")
FORMATS = ("csv", "jsonl")
DEFAULT_MAX_POINTS = 10_000

_INT_KEYS = ("K", "N", "M", "warmup_frames", "measure_frames", "replications",
             "seed", "buffer_cap")
_FLOAT_KEYS = ("p", "beta", "alpha", "q", "R")
_STR_KEYS = ("scenario", "scheme")
_SWEEPABLE = _INT_KEYS[:-2] + _FLOAT_KEYS  # everything numeric but seed/cap

# Emission order; every column is documented in the README format reference.
COLUMNS = (
    "row", "scenario", "scheme", "K", "N", "p", "beta", "alpha", "M", "q", "R",
    "warmup_frames", "measure_frames", "replications", "master_seed", "seed",
    "status",
    "T", "T_ci95", "D", "D_ci95", "P_RD_hat", "P_RD_ci95",
    "P_SR_hat", "P_SR_ci95", "occupancy_hat", "occupancy_ci95", "undelivered",
    "pred_T", "pred_T_max", "pred_T_finite_K", "pred_D", "pred_P_RD",
    "pred_occupancy", "pred_delta", "pred_c", "pred_beta_opt", "pred_validity",
)

STATUS_OK = "ok"
STATUS_OVERFLOW = "buffer_overflow"


class SpecError(ValueError):
    """Spec-file problem, anchored to the offending line."""

    def __init__(self, line: int | None, message: str):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ExperimentSpec:
    template: SystemConfig
    sweep: tuple          # ((param, (values...)), ...) in declaration order
    mode: str = "both"
    out_format: str = "csv"
    out_path: str | None = None

    @property
    def n_points(self) -> int:
        return math.prod(len(values) for _, values in self.sweep)


def _convert(key: str, raw: str, line: int):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise SpecError(line, f"{key} expects an integer, got {raw!r}") from None
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise SpecError(line, f"{key} expects a number, got {raw!r}") from None
    return raw


def _scan(text: str):
    """Yield (line_number, section, key, value) for every assignment."""
    section = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in ("system", "sweep", "output"):
                raise SpecError(lineno, f"unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise SpecError(lineno, f"expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        yield lineno, section, key.strip(), value.strip()


def parse_spec(text: str) -> ExperimentSpec:
    schema_version = None
    system: dict = {}
    system_lines: dict = {}
    sweep: list = []
    output: dict = {}
    max_points = DEFAULT_MAX_POINTS
    for lineno, section, key, value in _scan(text):
        if section is None:
            if key != "schema_version":
                raise SpecError(lineno, f"unknown top-level key {key!r} "
                                        "(only schema_version precedes sections)")
            if value != str(SCHEMA_VERSION):
                raise SpecError(lineno, f"unsupported schema_version {value!r}, "
                                        f"this build reads {SCHEMA_VERSION}")
            schema_version = int(value)
        elif section == "system":
            if key not in _INT_KEYS + _FLOAT_KEYS + _STR_KEYS:
                raise SpecError(lineno, f"unknown [system] key {key!r}")
            if key in system:
                raise SpecError(lineno, f"duplicate [system] key {key!r}")
            system[key] = _convert(key, value, lineno)
            system_lines[key] = lineno
        elif section == "sweep":
            if key == "max_points":
                try:
                    max_points = int(value)
                except ValueError:
                    raise SpecError(
                        lineno, f"max_points expects an integer, got {value!r}"
                    ) from None
                continue
            if key not in _SWEEPABLE:
                raise SpecError(lineno, f"{key!r} is not a sweepable parameter")
            if any(name == key for name, _ in sweep):
                raise SpecError(lineno, f"duplicate sweep axis {key!r}")
            values = tuple(_convert(key, item.strip(), lineno)
                           for item in value.split(",") if item.strip())
            if not values:
                raise SpecError(lineno, f"sweep axis {key} has no values")
            sweep.append((key, values))
        else:
            if key == "mode":
                if value not in MODES:
                    raise SpecError(lineno, f"mode must be one of {MODES}, "
                                            f"got {value!r}")
                output["mode"] = value
            elif key == "format":
                if value not in FORMATS:
                    raise SpecError(lineno, f"format must be one of {FORMATS}, "
                                            f"got {value!r}")
                output["out_format"] = value
            elif key == "path":
                output["out_path"] = value
            else:
                raise SpecError(lineno, f"unknown [output] key {key!r}")
    if schema_version is None:
        raise SpecError(None, "missing schema_version (expected before sections)")
    for required in ("scenario", "scheme", "K", "N", "p", "beta"):
        if required not in system:
            raise SpecError(None, f"[system] is missing required key {required!r}")
    try:
        template = SystemConfig(**system)
    except (TypeError, ValueError) as exc:
        message = str(exc)
        key = message.split()[0] if message else ""
        raise SpecError(system_lines.get(key), message) from None
    n_points = math.prod(len(values) for _, values in sweep)
    if n_points > max_points:
        raise SpecError(None, f"sweep has {n_points} points, cap is {max_points}")
    return ExperimentSpec(template=template, sweep=tuple(sweep), **output)


def load_spec(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as handle:
        return parse_spec(handle.read())


def _row_seed(master_seed: int, row: int) -> int:
    return int(np.random.SeedSequence([master_seed, row]).generate_state(
        1, np.uint64)[0])


def _predict(cfg: SystemConfig) -> Prediction:
    if cfg.scenario == FIXED:
        if cfg.scheme == ODWF:
            return odwf_fixed_prediction(cfg.K, cfg.N, cfg.p, cfg.beta)
        return baseline_fixed_prediction(cfg.K, cfg.N, cfg.p)
    if cfg.scheme == ODWF:
        return odwf_mobile_prediction(cfg.K, cfg.N, cfg.alpha, cfg.beta, cfg.q)
    return baseline_mobile_prediction(cfg.K, cfg.N, cfg.alpha, cfg.M, cfg.q)


def _config_cells(row: int, cfg: SystemConfig, master_seed: int) -> dict:
    cells = {
        "row": row, "scenario": cfg.scenario, "scheme": cfg.scheme,
        "K": cfg.K, "N": cfg.N, "p": cfg.p, "beta": cfg.beta,
        "warmup_frames": resolve_warmup(cfg),
        "measure_frames": cfg.measure_frames,
        "replications": cfg.replications,
        "master_seed": master_seed, "seed": cfg.seed,
        "status": STATUS_OK,
    }
    if cfg.scenario == MOBILE:
        cells.update({"alpha": cfg.alpha, "M": cfg.M, "q": cfg.q, "R": cfg.R})
    return cells


def _simulate_cells(cfg: SystemConfig) -> dict:
    try:
        summary = run_replicated(cfg)
    except BufferOverflowError:
        return {"status": STATUS_OVERFLOW}
    cells = {
        "T": summary.mean_throughput, "T_ci95": summary.throughput_ci95,
        "P_RD_hat": summary.p_rd_hat, "P_RD_ci95": summary.p_rd_ci95,
        "P_SR_hat": summary.p_sr_hat, "P_SR_ci95": summary.p_sr_ci95,
        "occupancy_hat": summary.occupancy,
        "occupancy_ci95": summary.occupancy_ci95,
        "undelivered": summary.undelivered_at_end,
    }
    if summary.mean_delay is not None:
        cells["D"] = summary.mean_delay
        cells["D_ci95"] = summary.delay_ci95
    return cells


def _prediction_cells(cfg: SystemConfig) -> dict:
    pred = _predict(cfg)
    cells = {
        "pred_T": pred.T, "pred_T_max": pred.T_max,
        "pred_T_finite_K": pred.T_finite_K, "pred_D": pred.D,
        "pred_P_RD": pred.P_RD, "pred_occupancy": pred.occupancy_alpha,
        "pred_delta": pred.delta, "pred_c": pred.c,
        "pred_beta_opt": pred.beta_opt,
    }
    cells = {k: v for k, v in cells.items() if v is not None}
    if pred.validity:
        cells["pred_validity"] = "|".join(sorted(pred.validity))
    return cells


def run_experiment(spec: ExperimentSpec, progress=None) -> list:
    """One row dict per sweep point, in deterministic sweep order.

    A run that trips the buffer guard yields a row with status
    "buffer_overflow" and absent simulation columns instead of aborting the
    sweep. progress, if given, is called as progress(row_index, n_points)
    after each row.
    """
    master_seed = spec.template.seed
    axes = [[(name, value) for value in values] for name, values in spec.sweep]
    table = []
    n_points = spec.n_points
    for row, combo in enumerate(itertools.product(*axes)):
        overrides = dict(combo)
        cfg = replace(spec.template, seed=_row_seed(master_seed, row), **overrides)
        cells = _config_cells(row, cfg, master_seed)
        if spec.mode in ("predict", "both"):
            cells.update(_prediction_cells(cfg))
        if spec.mode in ("simulate", "both"):
            cells.update(_simulate_cells(cfg))
        table.append(cells)
        if progress is not None:
            progress(row, n_points)
    return table


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return repr(value)
    return value


def emit(table: list, out_format: str, path: str | None) -> None:
    """Write the table as CSV or JSON-lines; path None or "-" means stdout.

    CSV carries every column of COLUMNS in order with absent values as empty
    fields; JSON-lines omits absent keys. Floats are emitted as shortest
    round-trip decimals, so identical tables produce identical bytes.
    """
    if not table:
        raise ValueError("refusing to emit an empty table")
    buffer = io.StringIO()
    if out_format == "csv":
        writer = csv.writer(buffer)
        writer.writerow(COLUMNS)
        for cells in table:
            writer.writerow([_cell_text(cells.get(col)) for col in COLUMNS])
    elif out_format == "jsonl":
        for cells in table:
            record = {col: _jsonable(cells[col]) for col in COLUMNS
                      if cells.get(col) is not None}
            buffer.write(json.dumps(record) + "\n")
    else:
        raise ValueError(f"unknown format {out_format!r}")
    if path is None or path == "-":
        sys.stdout.write(buffer.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(buffer.getvalue())

#!/usr/bin/env python3
"""
Harness configuration: scenario files and environment defaults.

A scenario file is flat sectioned key-value text:

    [map]
    n_q = 10
    K = 1.41421356
    M = 1000

    [run]
    scenario = fig1_timeseries
    steps = 2000
    pair = 1,3

    [output]
    path = Harness/runs/fig1

Keys are case sensitive (K is the classical parameter; k is derived and
cannot be set). Environment defaults come from the repository .env file.
"""

import configparser
import difflib
import math
import os
from dataclasses import dataclass, field
from enum import Enum

from dotenv import load_dotenv

from Simulation.analysis import (
    ELL_CALIBRATION,
    SATURATION_WINDOW,
    geometric_ell_grid,
    localization_time,
    map_params_for_ell,
    theoretical_ell,
)
from Simulation.dynamics import MapParams
from Simulation.errors import SimulationError
from Simulation.statevec import MAX_QUBITS, MIN_QUBITS, momentum_window

# --- Configuration ---
load_dotenv()
DEFAULT_WORKERS = int(os.getenv("HARNESS_WORKERS", "1"))
OUTPUT_ROOT = os.getenv("HARNESS_OUTPUT_ROOT", os.path.join("Harness", "runs"))

# --- Scenario presets ---
FIG1_M_VALUES = (10000, 5000, 300, 2000, 500, 1000, 700)  # lowest saturated concurrence first
FIG2_M = 800
SWEEP_ELL_MIN = 0.03
SWEEP_ELL_MAX = 64.0
ENTROPY_ELLS = tuple(float(2 ** kappa) for kappa in range(4, 9))

DERIVED_KEY_HINT = "k is derived; set K and M"
DERIVED_KEYS = {"k", "kick_strength", "T", "hbar", "hbar_eff"}

ALLOWED_KEYS = {
    "map": {"n_q", "K", "M", "ell_min", "ell_max", "points_per_decade", "ells", "ell_calibration"},
    "run": {
        "scenario", "steps", "pair", "pairs", "block", "blocks", "seed", "initial_state",
        "initial_momentum", "initial_width", "entropy_threshold", "workers",
        "max_degraded_fraction", "coding_anchor_M",
    },
    "output": {"path"},
}

CONFIG_HELP = f"""\
Scenario file keys (defaults in parentheses):
  [map]    n_q (10), K (required, > 0), M (int or comma list; required for
           fig1/fig2/custom unless preset), ell_min ({SWEEP_ELL_MIN}), ell_max ({SWEEP_ELL_MAX}),
           points_per_decade (8, >= 8), ells (explicit comma list, overrides the grid),
           ell_calibration ({ELL_CALIBRATION})
  [run]    scenario (required), steps (2000), pair/pairs ("i,j; i,j"), block/blocks ("a..b; a..b"),
           seed (0), initial_state (eigenstate | flat_phase), initial_momentum (0),
           initial_width (4), entropy_threshold (1.0), workers (HARNESS_WORKERS={DEFAULT_WORKERS}),
           max_degraded_fraction (0.25), coding_anchor_M (1000)
  [output] path (required)
Environment: HARNESS_WORKERS, HARNESS_OUTPUT_ROOT ({OUTPUT_ROOT}), HARNESS_LOG_LEVEL (INFO)
"""


class ConfigError(ValueError):
    """Usage error in a scenario file or command line; always names the key."""

    def __init__(self, key, message, suggestion=None):
        self.key = key
        self.suggestion = suggestion
        text = f"'{key}': {message}"
        if suggestion:
            text += f" ({suggestion})"
        super().__init__(text)


class ScenarioName(Enum):
    FIG1_TIMESERIES = "fig1_timeseries"
    FIG2_PAIRS = "fig2_pairs"
    FIG3_SATURATION_VS_ELL = "fig3_saturation_vs_ell"
    FIG4_ADJACENT_PAIRS = "fig4_adjacent_pairs"
    FIG5_BLOCK_ENTROPY = "fig5_block_entropy"
    FIG6_SINGLE_QUBIT_ENTROPY = "fig6_single_qubit_entropy"
    CUSTOM = "custom"

    @property
    def is_sweep(self) -> bool:
        return self in SWEEP_SCENARIOS

    @property
    def is_entropy(self) -> bool:
        return self in (ScenarioName.FIG5_BLOCK_ENTROPY, ScenarioName.FIG6_SINGLE_QUBIT_ENTROPY)


SWEEP_SCENARIOS = {
    ScenarioName.FIG3_SATURATION_VS_ELL,
    ScenarioName.FIG4_ADJACENT_PAIRS,
    ScenarioName.FIG5_BLOCK_ENTROPY,
    ScenarioName.FIG6_SINGLE_QUBIT_ENTROPY,
}


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs; serialize_scenario() writes it back out as a config file."""

    name: ScenarioName
    K: float
    output_path: str
    n_q: int = 10
    M_values: tuple[int, ...] = ()
    target_ells: tuple[float, ...] = ()
    ell_calibration: float = ELL_CALIBRATION
    pairs: tuple[tuple[int, int], ...] = ()
    blocks: tuple[tuple[int, ...], ...] = ()
    steps: int = 2000
    seed: int = 0
    initial_state: str = "eigenstate"
    initial_momentum: int = 0
    initial_width: float = 4.0
    entropy_threshold: float = 1.0
    workers: int = field(default=DEFAULT_WORKERS)
    max_degraded_fraction: float = 0.25
    coding_anchor_M: int = 1000

    @property
    def params(self) -> list[MapParams]:
        if self.target_ells:
            return [map_params_for_ell(self.n_q, self.K, ell, self.ell_calibration) for ell in self.target_ells]
        return [MapParams(self.n_q, self.K, M) for M in self.M_values]


# --- Value parsing ---

def _suggest(section, key):
    if key in DERIVED_KEYS:
        return DERIVED_KEY_HINT
    close = difflib.get_close_matches(key, sorted(ALLOWED_KEYS.get(section, ())), n=1)
    return f"did you mean '{close[0]}'?" if close else None


def _as_int(key, raw):
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {raw!r}") from None


def _as_float(key, raw):
    try:
        value = float(raw.strip())
    except ValueError:
        raise ConfigError(key, f"expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {raw!r}")
    return value


def _as_list(key, raw, convert):
    items = [item for item in raw.replace(";", ",").split(",") if item.strip()]
    if not items:
        raise ConfigError(key, "expected at least one value")
    return tuple(convert(key, item) for item in items)


def _as_pairs(key, raw):
    pairs = []
    for chunk in raw.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(key, f"expected 'i,j', got {chunk.strip()!r}")
        pairs.append((_as_int(key, parts[0]), _as_int(key, parts[1])))
    if not pairs:
        raise ConfigError(key, "expected at least one pair")
    return tuple(pairs)


def _as_blocks(key, raw):
    """Contiguous blocks, 'a..b' or a single label 'm'."""
    blocks = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ".." in chunk:
            first, _, last = chunk.partition("..")
            first, last = _as_int(key, first), _as_int(key, last)
            if last < first:
                raise ConfigError(key, f"block {chunk!r} must run upwards")
            blocks.append(tuple(range(first, last + 1)))
        else:
            blocks.append((_as_int(key, chunk),))
    if not blocks:
        raise ConfigError(key, "expected at least one block")
    return tuple(blocks)


# --- Scenario assembly ---

def _default_pairs(name, n_q):
    if name is ScenarioName.FIG1_TIMESERIES:
        return ((1, 3),)
    if name in (ScenarioName.FIG2_PAIRS, ScenarioName.FIG3_SATURATION_VS_ELL):
        return tuple((1, j) for j in range(2, min(5, n_q) + 1))
    if name is ScenarioName.FIG4_ADJACENT_PAIRS:
        return tuple((i, i + 1) for i in range(1, min(5, n_q - 1) + 1))
    return ()


def _default_blocks(name, n_q):
    if name is ScenarioName.FIG5_BLOCK_ENTROPY:
        return tuple(tuple(range(1, m + 1)) for m in range(1, n_q))
    if name is ScenarioName.FIG6_SINGLE_QUBIT_ENTROPY:
        return tuple((m,) for m in range(1, n_q + 1))
    return ()


def build_scenario(values):
    """Builds and validates a Scenario from {section: {key: raw string}}."""
    for section, keys in values.items():
        if section not in ALLOWED_KEYS:
            raise ConfigError(section, "unknown section", f"sections are {', '.join(sorted(ALLOWED_KEYS))}")
        for key in keys:
            if key not in ALLOWED_KEYS[section]:
                raise ConfigError(key, f"unknown key in [{section}]", _suggest(section, key))

    map_values = values.get("map", {})
    run_values = values.get("run", {})
    output_values = values.get("output", {})

    if "scenario" not in run_values:
        raise ConfigError("scenario", "missing required key in [run]")
    try:
        name = ScenarioName(run_values["scenario"].strip())
    except ValueError:
        choices = ", ".join(s.value for s in ScenarioName)
        raise ConfigError("scenario", f"unknown scenario {run_values['scenario']!r}", f"choose one of {choices}") from None
    if "K" not in map_values:
        raise ConfigError("K", "missing required key in [map]")
    if "path" not in output_values:
        raise ConfigError("path", "missing required key in [output]")

    n_q = _as_int("n_q", map_values.get("n_q", "10"))
    if not MIN_QUBITS <= n_q <= MAX_QUBITS:
        raise ConfigError("n_q", f"must lie in [{MIN_QUBITS}, {MAX_QUBITS}], got {n_q}")
    K = _as_float("K", map_values["K"])
    if K <= 0:
        raise ConfigError("K", f"must be > 0 (chaotic regime), got {K}")

    M_values = _as_list("M", map_values["M"], _as_int) if "M" in map_values else ()
    target_ells = ()
    if name is ScenarioName.FIG1_TIMESERIES and not M_values:
        M_values = FIG1_M_VALUES
    elif name is ScenarioName.FIG2_PAIRS and not M_values:
        M_values = (FIG2_M,)
    if name.is_sweep:
        target_ells = _sweep_ells(name, map_values)
        M_values = ()
    elif not M_values:
        raise ConfigError("M", f"missing required key in [map] for scenario {name.value}")
    if any(M < 1 for M in M_values):
        raise ConfigError("M", f"every M must be a positive integer, got {M_values}")

    pairs = ()
    if "pair" in run_values or "pairs" in run_values:
        key = "pairs" if "pairs" in run_values else "pair"
        pairs = _as_pairs(key, run_values[key])
    blocks = ()
    if "block" in run_values or "blocks" in run_values:
        key = "blocks" if "blocks" in run_values else "block"
        blocks = _as_blocks(key, run_values[key])
    pairs = pairs or _default_pairs(name, n_q)
    blocks = blocks or _default_blocks(name, n_q)

    scenario = Scenario(
        name=name,
        K=K,
        output_path=output_values["path"].strip(),
        n_q=n_q,
        M_values=M_values,
        target_ells=target_ells,
        ell_calibration=_as_float("ell_calibration", map_values.get("ell_calibration", str(ELL_CALIBRATION))),
        pairs=pairs,
        blocks=blocks,
        steps=_as_int("steps", run_values.get("steps", "2000")),
        seed=_as_int("seed", run_values.get("seed", "0")),
        initial_state=run_values.get("initial_state", "eigenstate").strip(),
        initial_momentum=_as_int("initial_momentum", run_values.get("initial_momentum", "0")),
        initial_width=_as_float("initial_width", run_values.get("initial_width", "4")),
        entropy_threshold=_as_float("entropy_threshold", run_values.get("entropy_threshold", "1.0")),
        workers=_as_int("workers", run_values.get("workers", str(DEFAULT_WORKERS))),
        max_degraded_fraction=_as_float("max_degraded_fraction", run_values.get("max_degraded_fraction", "0.25")),
        coding_anchor_M=_as_int("coding_anchor_M", run_values.get("coding_anchor_M", "1000")),
    )
    validate_scenario(scenario)
    return scenario


def _sweep_ells(name, map_values):
    if "ells" in map_values:
        ells = _as_list("ells", map_values["ells"], _as_float)
        if any(ell <= 0 for ell in ells):
            raise ConfigError("ells", f"every target ell must be > 0, got {ells}")
        return tuple(sorted(ells))
    if name.is_entropy and not {"ell_min", "ell_max"} & set(map_values):
        return ENTROPY_ELLS
    ell_min = _as_float("ell_min", map_values.get("ell_min", str(SWEEP_ELL_MIN)))
    ell_max = _as_float("ell_max", map_values.get("ell_max", str(SWEEP_ELL_MAX)))
    points_per_decade = _as_int("points_per_decade", map_values.get("points_per_decade", "8"))
    if points_per_decade < 8:
        raise ConfigError("points_per_decade", f"must be >= 8, got {points_per_decade}")
    if not 0 < ell_min < ell_max:
        raise ConfigError("ell_min", f"need 0 < ell_min < ell_max, got [{ell_min}, {ell_max}]")
    return tuple(float(ell) for ell in geometric_ell_grid(ell_min, ell_max, points_per_decade))


def validate_scenario(scenario):
    n_q = scenario.n_q
    if scenario.steps < 0:
        raise ConfigError("steps", f"must be >= 0, got {scenario.steps}")
    if scenario.workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {scenario.workers}")
    if scenario.ell_calibration <= 0:
        raise ConfigError("ell_calibration", f"must be > 0, got {scenario.ell_calibration}")
    if not 0.0 <= scenario.max_degraded_fraction <= 1.0:
        raise ConfigError("max_degraded_fraction", f"must lie in [0, 1], got {scenario.max_degraded_fraction}")
    if scenario.coding_anchor_M < 1:
        raise ConfigError("coding_anchor_M", f"must be >= 1, got {scenario.coding_anchor_M}")
    for i, j in scenario.pairs:
        if not 1 <= i < j <= n_q:
            raise ConfigError("pairs", f"pair ({i},{j}) needs 1 <= i < j <= n_q={n_q}")
    for block in scenario.blocks:
        if not block or any(not 1 <= q <= n_q for q in block):
            raise ConfigError("blocks", f"block {block} has labels outside [1, {n_q}]")
        if any(a >= b for a, b in zip(block, block[1:])):
            raise ConfigError("blocks", f"block {block} must be distinct and ascending")
        if len(block) >= n_q:
            raise ConfigError("blocks", f"block {block} leaves nothing to trace out at n_q={n_q}")
    if scenario.initial_state not in ("eigenstate", "flat_phase"):
        raise ConfigError("initial_state", f"expected 'eigenstate' or 'flat_phase', got {scenario.initial_state!r}")
    low, high = momentum_window(n_q)
    if not low <= scenario.initial_momentum <= high:
        raise ConfigError("initial_momentum", f"must lie in [{low}, {high}] for n_q={n_q}")
    if scenario.initial_state == "flat_phase" and scenario.initial_width < 1:
        raise ConfigError("initial_width", f"must be >= 1, got {scenario.initial_width}")
    if scenario.name.is_sweep and not (scenario.pairs or scenario.blocks):
        raise ConfigError("pairs", f"scenario {scenario.name.value} needs at least one pair or block")
    try:
        params = scenario.params
        if scenario.name is ScenarioName.FIG3_SATURATION_VS_ELL:
            params.append(MapParams(n_q, scenario.K, scenario.coding_anchor_M))
        longest = max((localization_time(nominal_ell(p, scenario.ell_calibration)) for p in params), default=0)
    except SimulationError as e:
        raise ConfigError("M", str(e)) from None
    if (scenario.pairs or scenario.blocks) and scenario.steps < longest + SATURATION_WINDOW:
        raise ConfigError(
            "steps",
            f"saturation needs at least t* + {SATURATION_WINDOW} = {longest + SATURATION_WINDOW} steps, "
            f"got {scenario.steps}",
        )


def nominal_ell(params, calibration=ELL_CALIBRATION):
    """The calibrated a-priori localization length of one map point."""
    return calibration * theoretical_ell(params.k)


def parse_config(path):
    """Reads a scenario file. A missing file raises FileNotFoundError (an I/O error, not a usage error)."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # keep K and k apart
    try:
        with open(path, 'r', encoding='utf-8') as f:
            parser.read_file(f)
    except configparser.Error as e:
        raise ConfigError(os.path.basename(path), f"malformed config: {e}") from None
    values = {section: dict(parser.items(section)) for section in parser.sections()}
    return build_scenario(values)


def serialize_scenario(scenario):
    """Config-file text that parse_config() turns back into an equal Scenario."""
    def fmt(value):
        return format(value, ".17g")

    lines = ["[map]", f"n_q = {scenario.n_q}", f"K = {fmt(scenario.K)}"]
    if scenario.target_ells:
        lines.append("ells = " + ", ".join(fmt(ell) for ell in scenario.target_ells))
    else:
        lines.append("M = " + ", ".join(str(M) for M in scenario.M_values))
    lines.append(f"ell_calibration = {fmt(scenario.ell_calibration)}")
    lines += ["", "[run]", f"scenario = {scenario.name.value}", f"steps = {scenario.steps}"]
    if scenario.pairs:
        lines.append("pairs = " + "; ".join(f"{i},{j}" for i, j in scenario.pairs))
    if scenario.blocks:
        lines.append("blocks = " + "; ".join(
            str(block[0]) if len(block) == 1 else f"{block[0]}..{block[-1]}" for block in scenario.blocks
        ))
    lines += [
        f"seed = {scenario.seed}",
        f"initial_state = {scenario.initial_state}",
        f"initial_momentum = {scenario.initial_momentum}",
        f"initial_width = {fmt(scenario.initial_width)}",
        f"entropy_threshold = {fmt(scenario.entropy_threshold)}",
        f"workers = {scenario.workers}",
        f"max_degraded_fraction = {fmt(scenario.max_degraded_fraction)}",
        f"coding_anchor_M = {scenario.coding_anchor_M}",
        "",
        "[output]",
        f"path = {scenario.output_path}",
        "",
    ]
    return "\n".join(lines)

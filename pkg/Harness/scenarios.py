#!/usr/bin/env python3
"""
Scenario execution.

Each MapParams of a scenario is one point: evolve the initial state, record
the observables, average the late-time momentum profile and reduce the
records to saturation values. Points run in parallel on a thread pool and
are assembled in point order, so the emitted files do not depend on the
worker count.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from Harness.config import ScenarioName, nominal_ell, serialize_scenario
from Harness.output import (
    ENTROPY_HEADER,
    PROFILE_HEADER,
    SATURATION_HEADER,
    Table,
    TimeSeries,
    block_observable,
    emit_csv,
    pair_observable,
    timeseries_file,
    write_summary,
)
from Simulation.analysis import (
    PROFILE_WINDOW,
    SATURATION_WINDOW,
    LocalizationEstimate,
    ProfileAverager,
    anchored_small_ell_curve,
    count_entangled_qubits,
    critical_ell,
    estimate_ell_from_profile,
    fit_exponential,
    fit_power_law,
    locate_peak,
    saturation_halfwidth,
    saturation_value,
)
from Simulation.dynamics import MapParams, evolve
from Simulation.entanglement import block_entropy, concurrence_of_pair
from Simulation.errors import InsufficientSupportError, NumericalDegradationError, SimulationError
from Simulation.statevec import StateVector, flat_phase_localized_state, momentum_eigenstate, signed_momenta

# --- Acceptance targets ---
PROFILE_CHECK_M = 300
PROFILE_MIN_R_SQUARED = 0.9
PROFILE_ELL_FACTOR = 2.0
SMALL_ELL_RANGE = (0.03, 1.0)
LARGE_ELL_RANGE = (4.0, 30.0)
POWER_LAW_EXPONENT = 0.5
POWER_LAW_TOLERANCE = 0.15
POWER_LAW_MIN_R_SQUARED = 0.9
EXPONENTIAL_MIN_R_SQUARED = 0.8
CODING_RATIO_RANGE = (1.0 / 8.0, 1.0 / 2.0)
DOUBLING_RATIO_RANGE = (1.3, 3.0)
COUNT_GROWTH_RANGE = (0, 2)
ORDERING_TOLERANCE = 1e-9


class DegradationLimitError(NumericalDegradationError):
    """More points degraded than the scenario allows; outputs are still written."""


@dataclass(frozen=True)
class PointSpec:
    index: int
    params: MapParams
    nominal_ell: float
    role: str = "grid"


@dataclass
class PointResult:
    spec: PointSpec
    ell: float = math.nan
    ell_source: str = "fit"
    estimate: LocalizationEstimate | None = None
    profile: np.ndarray | None = None
    series: TimeSeries = field(default_factory=TimeSeries)
    concurrences: dict = field(default_factory=dict)
    entropies: dict = field(default_factory=dict)
    final_state: StateVector | None = None
    degraded: str | None = None


class ObservableRecorder:
    """Evolution observer appending pair concurrences, block entropies and (optionally) ell to a TimeSeries."""

    def __init__(self, series, pairs, blocks, start_step=1, track_ell=False):
        self.series = series
        self.pairs = pairs
        self.blocks = blocks
        self.start_step = start_step
        self.track_ell = track_ell

    def __call__(self, step, state):
        if step < self.start_step:
            return None
        for i, j in self.pairs:
            self.series.append(step, pair_observable(i, j), concurrence_of_pair(state, i, j))
        for block in self.blocks:
            self.series.append(step, block_observable(block), block_entropy(state, block))
        if self.track_ell:
            try:
                ell = estimate_ell_from_profile(state.probabilities()).ell_fit
            except InsufficientSupportError:
                return None
            if math.isfinite(ell):
                self.series.append(step, "ell", ell)
        return None


# --- Planning ---

def plan_points(scenario):
    points = [
        PointSpec(index, params, nominal_ell(params, scenario.ell_calibration))
        for index, params in enumerate(scenario.params)
    ]
    if scenario.name is ScenarioName.FIG3_SATURATION_VS_ELL:
        if all(point.params.M != scenario.coding_anchor_M for point in points):
            anchor = MapParams(scenario.n_q, scenario.K, scenario.coding_anchor_M)
            points.append(PointSpec(len(points), anchor, nominal_ell(anchor, scenario.ell_calibration), "coding_anchor"))
    return points


def initial_state(scenario, spec):
    if scenario.initial_state == "flat_phase":
        return flat_phase_localized_state(
            scenario.n_q, scenario.initial_width, scenario.initial_momentum, scenario.seed + spec.index
        )
    return momentum_eigenstate(scenario.n_q, scenario.initial_momentum)


# --- One point ---

def _attach_ell(result):
    nominal = result.spec.nominal_ell
    try:
        estimate = estimate_ell_from_profile(result.profile)
    except InsufficientSupportError as e:
        logging.warning(f"Point M={result.spec.params.M}: {e} Using nominal ell={nominal:.4g}.")
        result.ell, result.ell_source = nominal, "nominal"
        return
    result.estimate = estimate
    if math.isfinite(estimate.ell_fit):
        result.ell, result.ell_source = estimate.ell_fit, "fit"
    else:
        logging.warning(f"Point M={result.spec.params.M}: profile fit gave no decay. Using nominal ell={nominal:.4g}.")
        result.ell, result.ell_source = nominal, "nominal"


def simulate_point(scenario, spec):
    p = spec.params
    logging.debug(f"Point {spec.index}: M={p.M}, k={p.k:.6g}, nominal ell={spec.nominal_ell:.4g}")
    result = PointResult(spec)
    steps = scenario.steps

    record_start = max(1, steps - SATURATION_WINDOW + 1) if scenario.name.is_sweep else 1
    recorder = ObservableRecorder(
        result.series,
        scenario.pairs,
        scenario.blocks,
        start_step=record_start,
        track_ell=not scenario.name.is_sweep,
    )
    averager = ProfileAverager(max(1, steps - PROFILE_WINDOW + 1))

    try:
        psi0 = initial_state(scenario, spec)
        final_state, _ = evolve(psi0, p, steps, observers=(recorder, averager))
        result.final_state = final_state
        result.profile = averager.profile() if steps > 0 else psi0.probabilities()
        _attach_ell(result)
        # window placement uses the a-priori ell so it never depends on the fit
        for i, j in scenario.pairs:
            values = result.series.values(pair_observable(i, j))
            result.concurrences[(i, j)] = (
                saturation_value(values, spec.nominal_ell, steps),
                saturation_halfwidth(values, spec.nominal_ell, steps),
            )
        for block in scenario.blocks:
            values = result.series.values(block_observable(block))
            result.entropies[block] = saturation_value(values, spec.nominal_ell, steps)
    except NumericalDegradationError as e:
        logging.warning(f"Point {spec.index} (M={p.M}) degraded: {e}")
        result.degraded = str(e)
        return result

    logging.info(
        f"Point {spec.index} done: M={p.M}, ell={result.ell:.4g} ({result.ell_source}), "
        f"{len(result.series)} records"
    )
    return result


def run_points(scenario, points):
    workers = max(1, min(scenario.workers, len(points)))
    if workers == 1:
        results = [simulate_point(scenario, spec) for spec in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(lambda spec: simulate_point(scenario, spec), points))
    return sorted(results, key=lambda result: result.spec.index)


# --- Tables ---

def saturation_table(results, pairs):
    table = Table(SATURATION_HEADER)
    for result in results:
        if result.degraded:
            continue
        for i, j in pairs:
            value, halfwidth = result.concurrences[(i, j)]
            table.rows.append((result.ell, i, j, value, halfwidth))
    return table


def entropy_table(results, blocks):
    table = Table(ENTROPY_HEADER)
    for result in results:
        if result.degraded:
            continue
        for block in blocks:
            table.rows.append((result.ell, block[0], block[-1], result.entropies[block]))
    return table


def profile_table(results):
    table = Table(PROFILE_HEADER)
    for result in results:
        if result.profile is None:
            continue
        momenta = signed_momenta(result.spec.params.n_q)
        order = np.argsort(momenta, kind="stable")
        for slot in order:
            table.rows.append((result.spec.params.M, int(momenta[slot]), float(result.profile[slot])))
    return table


# --- Analysis helpers ---

def _acceptance(name, value, target, passed):
    return {"name": name, "value": value, "target": target, "passed": bool(passed)}


def _pair_points(table, pair, low=0.0, high=math.inf, positive=False):
    points = []
    for ell, i, j, value, _ in table.rows:
        if (i, j) == pair and low <= ell <= high and (value > 0 or not positive):
            points.append((ell, value))
    return points


def _fit_entry(fit, points):
    try:
        report = fit(points)
    except SimulationError as e:
        return None, {"error": str(e), "points_used": len(points)}
    entry = asdict(report)
    entry["model"] = report.model.value
    return report, entry


def _coding_ratios(values_by_pair, i):
    ratios = []
    js = sorted(j for (a, j) in values_by_pair if a == i)
    for j, next_j in zip(js, js[1:]):
        low, high = values_by_pair[(i, j)], values_by_pair[(i, next_j)]
        ratio = high / low if low > 0 else math.nan
        ratios.append({"pair": [i, j], "next_pair": [i, next_j], "ratio": ratio})
    return ratios


def _ratio_acceptance(prefix, ratios, bounds):
    entries = []
    for item in ratios:
        i, j = item["pair"]
        _, next_j = item["next_pair"]
        ratio = item["ratio"]
        entries.append(_acceptance(
            f"{prefix}_C{i}{next_j}_over_C{i}{j}",
            ratio,
            f"in [{bounds[0]:.4g}, {bounds[1]:.4g}]",
            math.isfinite(ratio) and bounds[0] <= ratio <= bounds[1],
        ))
    return entries


def _live(results):
    return [result for result in results if not result.degraded]


# --- Per-scenario analyses ---

def analyze_timeseries(scenario, results, tables, summary):
    """Ordering of the saturated pair concurrence along the M list, and the M=300 profile check."""
    pair = scenario.pairs[0]
    live = _live(results)
    ordered = [(result.spec.params.M, result.concurrences[pair][0]) for result in live]
    violations = sum(1 for (_, a), (_, b) in zip(ordered, ordered[1:]) if b < a)
    summary["analysis"]["saturation_order"] = [{"M": M, "concurrence_sat": value} for M, value in ordered]
    if len(ordered) > 1:
        summary["acceptance"].append(_acceptance(
            f"saturation_order_C{pair[0]}{pair[1]}", violations, "0 inversions along the configured M order",
            violations == 0 and len(live) == len(results),
        ))

    for result in live:
        if result.spec.params.M != PROFILE_CHECK_M or result.estimate is None:
            continue
        estimate = result.estimate
        summary["acceptance"].append(_acceptance(
            f"profile_r_squared_M{PROFILE_CHECK_M}", estimate.r_squared, f"> {PROFILE_MIN_R_SQUARED}",
            estimate.r_squared > PROFILE_MIN_R_SQUARED,
        ))
        ratio = estimate.ell_fit / result.spec.nominal_ell
        summary["acceptance"].append(_acceptance(
            f"profile_ell_M{PROFILE_CHECK_M}", estimate.ell_fit,
            f"within a factor {PROFILE_ELL_FACTOR:g} of {result.spec.nominal_ell:.4g}",
            1.0 / PROFILE_ELL_FACTOR <= ratio <= PROFILE_ELL_FACTOR,
        ))


def analyze_pairs(scenario, results, tables, summary):
    """Coding hierarchy C(i,j) at fixed M: successive ratios and an exponential fit in j."""
    for result in _live(results):
        values = {pair: value for pair, (value, _) in result.concurrences.items()}
        i = scenario.pairs[0][0]
        ratios = _coding_ratios(values, i)
        points = [(j, values[(a, j)]) for (a, j) in sorted(values) if a == i and values[(a, j)] > 0]
        report, entry = _fit_entry(fit_exponential, points)
        if report is not None:
            # C ~ 2^(-x j): the rate over ln 2 is x
            entry["exponent_base2"] = report.exponent_or_rate / math.log(2.0)
        summary["analysis"].setdefault("coding", []).append(
            {"M": result.spec.params.M, "ell": result.ell, "ratios": ratios}
        )
        summary["fits"][f"coding_M{result.spec.params.M}"] = entry
        summary["acceptance"].extend(_ratio_acceptance(f"coding_M{result.spec.params.M}", ratios, CODING_RATIO_RANGE))


def analyze_saturation_sweep(scenario, results, tables, summary):
    """Small-ell power law, large-ell exponential decay, zero at the top of the grid, coding ratios."""
    table = tables["saturation"]
    pairs = set(scenario.pairs)

    if (1, 2) in pairs:
        points = _pair_points(table, (1, 2), *SMALL_ELL_RANGE, positive=True)
        report, entry = _fit_entry(fit_power_law, points)
        summary["fits"]["power_law_C12_small_ell"] = entry
        summary["acceptance"].append(_acceptance(
            "power_law_exponent_C12",
            None if report is None else report.exponent_or_rate,
            f"{POWER_LAW_EXPONENT} +/- {POWER_LAW_TOLERANCE}, r^2 > {POWER_LAW_MIN_R_SQUARED}",
            report is not None
            and abs(report.exponent_or_rate - POWER_LAW_EXPONENT) <= POWER_LAW_TOLERANCE
            and report.r_squared > POWER_LAW_MIN_R_SQUARED,
        ))
        if points:
            ordered = sorted(points)
            anchor_ell, anchor_value = ordered[0]
            curve = anchored_small_ell_curve([ell for ell, _ in ordered], 1, 2, anchor_ell, anchor_value)
            summary["analysis"]["small_ell_model_C12"] = [
                {"ell": ell, "measured": value, "model": float(model)}
                for (ell, value), model in zip(ordered, curve)
            ]

    if (1, 3) in pairs:
        points = _pair_points(table, (1, 3), *LARGE_ELL_RANGE, positive=True)
        report, entry = _fit_entry(fit_exponential, points)
        summary["fits"]["exponential_C13_large_ell"] = entry
        summary["acceptance"].append(_acceptance(
            "exponential_rate_C13",
            None if report is None else report.exponent_or_rate,
            f"A > 0, r^2 > {EXPONENTIAL_MIN_R_SQUARED}",
            report is not None and report.exponent_or_rate > 0 and report.r_squared > EXPONENTIAL_MIN_R_SQUARED,
        ))
        grid = [result for result in _live(results) if result.spec.role == "grid"]
        if grid:
            top = max(grid, key=lambda result: result.ell)
            value = top.concurrences[(1, 3)][0]
            summary["acceptance"].append(_acceptance(
                "C13_at_largest_ell", value, f"== 0 at ell={top.ell:.4g}", value == 0.0
            ))

    anchors = [result for result in _live(results) if result.spec.params.M == scenario.coding_anchor_M]
    if anchors:
        anchor = anchors[0]
        values = {pair: value for pair, (value, _) in anchor.concurrences.items()}
        ratios = _coding_ratios(values, 1)
        summary["analysis"]["coding_anchor"] = {"M": anchor.spec.params.M, "ell": anchor.ell, "ratios": ratios}
        summary["acceptance"].extend(_ratio_acceptance("coding_anchor", ratios, CODING_RATIO_RANGE))


def analyze_adjacent_sweep(scenario, results, tables, summary):
    """Peak location ell_c(i) of each adjacent pair and the ratio between successive peaks."""
    table = tables["saturation"]
    peaks = {}
    for i, j in scenario.pairs:
        if j != i + 1:
            continue
        points = _pair_points(table, (i, j))
        if not points:
            continue
        ell_c, value = locate_peak(points)
        peaks[i] = ell_c
        summary["analysis"].setdefault("critical_ell", []).append({
            "pair": [i, j], "ell_c": ell_c, "concurrence_peak": value,
            "predicted": critical_ell(i), "ratio_to_predicted": ell_c / critical_ell(i),
        })
    for i in sorted(peaks):
        if i + 1 not in peaks:
            continue
        ratio = peaks[i + 1] / peaks[i]
        summary["acceptance"].append(_acceptance(
            f"critical_ell_ratio_{i + 1}_over_{i}", ratio,
            f"in [{DOUBLING_RATIO_RANGE[0]}, {DOUBLING_RATIO_RANGE[1]}]",
            DOUBLING_RATIO_RANGE[0] <= ratio <= DOUBLING_RATIO_RANGE[1],
        ))


def _growth_acceptance(name, counts):
    steps = [b - a for (_, a), (_, b) in zip(counts, counts[1:])]
    passed = bool(steps) and all(COUNT_GROWTH_RANGE[0] <= step <= COUNT_GROWTH_RANGE[1] for step in steps)
    return _acceptance(name, steps, f"each doubling adds 1 +/- 1 ({COUNT_GROWTH_RANGE[0]}..{COUNT_GROWTH_RANGE[1]})", passed)


def _ordering_violations(live, blocks):
    violations = 0
    by_ell = sorted(live, key=lambda result: result.ell)
    for block in blocks:
        for lower, upper in zip(by_ell, by_ell[1:]):
            if upper.entropies[block] < lower.entropies[block] - ORDERING_TOLERANCE:
                violations += 1
    return violations


def analyze_block_entropy(scenario, results, tables, summary):
    """Entangled-block size per ell: largest m with S(1..m) > S_c."""
    threshold = scenario.entropy_threshold
    live = sorted(_live(results), key=lambda result: result.ell)
    leading = [block for block in scenario.blocks if block[0] == 1]
    counts = []
    for result in live:
        saturated = max((len(block) for block in leading if result.entropies[block] > threshold), default=0)
        counts.append((result.ell, saturated))
        summary["analysis"].setdefault("entangled_qubits", []).append({
            "M": result.spec.params.M,
            "ell": result.ell,
            "saturated": saturated,
            "final_state": count_entangled_qubits(result.final_state, threshold),
        })
    violations = _ordering_violations(live, scenario.blocks)
    summary["acceptance"].append(_acceptance("entropy_ordering_in_ell", violations, "0 inversions", violations == 0))
    summary["acceptance"].append(_growth_acceptance("entangled_block_growth", counts))


def analyze_single_qubit_entropy(scenario, results, tables, summary):
    """Number of single qubits whose saturated entropy exceeds S_c, per ell."""
    threshold = scenario.entropy_threshold
    live = sorted(_live(results), key=lambda result: result.ell)
    singles = [block for block in scenario.blocks if len(block) == 1]
    counts = []
    for result in live:
        entangled = [block[0] for block in singles if result.entropies[block] > threshold]
        counts.append((result.ell, len(entangled)))
        summary["analysis"].setdefault("entangled_single_qubits", []).append(
            {"M": result.spec.params.M, "ell": result.ell, "count": len(entangled), "qubits": entangled}
        )
    violations = _ordering_violations(live, singles)
    summary["acceptance"].append(_acceptance("single_qubit_entropy_ordering_in_ell", violations, "0 inversions", violations == 0))
    summary["acceptance"].append(_growth_acceptance("entangled_single_qubit_growth", counts))


ANALYSES = {
    ScenarioName.FIG1_TIMESERIES: analyze_timeseries,
    ScenarioName.FIG2_PAIRS: analyze_pairs,
    ScenarioName.FIG3_SATURATION_VS_ELL: analyze_saturation_sweep,
    ScenarioName.FIG4_ADJACENT_PAIRS: analyze_adjacent_sweep,
    ScenarioName.FIG5_BLOCK_ENTROPY: analyze_block_entropy,
    ScenarioName.FIG6_SINGLE_QUBIT_ENTROPY: analyze_single_qubit_entropy,
}


# --- Summary ---

def config_echo(scenario):
    echo = asdict(scenario)
    echo["name"] = scenario.name.value
    return echo


def point_record(result):
    spec = result.spec
    estimate = result.estimate
    return {
        "index": spec.index,
        "role": spec.role,
        "M": spec.params.M,
        "k": spec.params.k,
        "nominal_ell": spec.nominal_ell,
        "ell": result.ell,
        "ell_source": result.ell_source,
        "fitted_ell": None if estimate is None else estimate.ell_fit,
        "residual": None if estimate is None else estimate.residual,
        "r_squared": None if estimate is None else estimate.r_squared,
        "fit_points": None if estimate is None else estimate.points_used,
        "degraded": result.degraded,
    }


def build_summary(scenario, results, tables):
    degraded = sum(1 for result in results if result.degraded)
    summary = {
        "scenario": scenario.name.value,
        "config": config_echo(scenario),
        "points": [point_record(result) for result in results],
        "saturation": [dict(zip(SATURATION_HEADER, row)) for row in tables["saturation"].rows],
        "entropy": [dict(zip(ENTROPY_HEADER, row)) for row in tables["entropy"].rows],
        "fits": {},
        "analysis": {},
        "acceptance": [],
        "degraded_points": degraded,
        "degraded_fraction": degraded / len(results) if results else 0.0,
    }
    analysis = ANALYSES.get(scenario.name)
    if analysis is not None and len(results) > degraded:
        analysis(scenario, results, tables, summary)
    return summary


# --- Entry point ---

def _emit_if_rows(table, path, files):
    if not table.rows:
        logging.warning(f"No rows for {os.path.basename(path)}; file not written.")
        return
    files.append(os.path.basename(emit_csv(table, path)))


def run_scenario(scenario):
    """Runs every point, writes the CSV tables and summary.json, returns the summary dict."""
    output_dir = scenario.output_path
    os.makedirs(output_dir, exist_ok=True)
    logging.info(f">>> Scenario {scenario.name.value}: n_q={scenario.n_q}, K={scenario.K}, steps={scenario.steps} <<<")

    config_path = os.path.join(output_dir, "scenario.ini")
    with open(config_path, 'w', encoding='utf-8') as f:
        f.write(serialize_scenario(scenario))

    points = plan_points(scenario)
    logging.info(f"--- Running {len(points)} point(s) on {max(1, min(scenario.workers, len(points)))} worker(s) ---")
    results = run_points(scenario, points)

    files = ["scenario.ini"]
    tables = {
        "saturation": saturation_table(results, scenario.pairs),
        "entropy": entropy_table(results, scenario.blocks),
        "profiles": profile_table(results),
    }
    if scenario.pairs:
        _emit_if_rows(tables["saturation"], os.path.join(output_dir, "saturation.csv"), files)
    if scenario.blocks:
        _emit_if_rows(tables["entropy"], os.path.join(output_dir, "entropy.csv"), files)
    _emit_if_rows(tables["profiles"], os.path.join(output_dir, "profiles.csv"), files)
    if not scenario.name.is_sweep:
        for result in results:
            if result.degraded:
                continue
            for observable in result.series.observables():
                name = timeseries_file(result.spec.index, result.spec.params.M, observable)
                emit_csv(result.series.only(observable), os.path.join(output_dir, name))
                files.append(name)

    summary = build_summary(scenario, results, tables)
    summary["files"] = sorted(files)
    write_summary(summary, os.path.join(output_dir, "summary.json"))

    passed = sum(1 for entry in summary["acceptance"] if entry["passed"])
    logging.info(f"Acceptance checks passed: {passed}/{len(summary['acceptance'])}")
    for entry in summary["acceptance"]:
        if not entry["passed"]:
            logging.warning(f"Acceptance check '{entry['name']}' missed: {entry['value']} (target {entry['target']})")

    if summary["degraded_fraction"] > scenario.max_degraded_fraction:
        raise DegradationLimitError(
            f"{summary['degraded_points']} of {len(results)} points degraded "
            f"(allowed fraction {scenario.max_degraded_fraction:g}); outputs in {output_dir}"
        )
    logging.info(f">>> Scenario {scenario.name.value} finished; outputs in {os.path.abspath(output_dir)} <<<")
    return summary

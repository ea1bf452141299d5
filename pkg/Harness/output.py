#!/usr/bin/env python3
"""
Run artifacts: per-step time series, CSV tables and the summary report.

A time-series scenario writes one file per point and observable,
timeseries_pNN_M<M>_<observable>.csv.

Floats are written with 17 significant digits so that reading a table back
reproduces the exact values the run computed.
"""

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

# --- CSV headers ---
TIMESERIES_HEADER = ("step", "observable", "value")
SATURATION_HEADER = ("ell", "pair_i", "pair_j", "concurrence_sat", "ci_halfwidth")
ENTROPY_HEADER = ("ell", "block_first", "block_last", "entropy_sat")
PROFILE_HEADER = ("M", "momentum", "probability")


def pair_observable(i, j):
    return f"C_{i}_{j}"


def block_observable(block):
    return f"S_{block[0]}_{block[-1]}"


def timeseries_file(index, M, observable):
    return f"timeseries_p{index:02d}_M{M}_{observable}.csv"


class TimeSeries:
    """(step, observable, value) records; steps strictly increase per observable."""

    def __init__(self):
        self._records = []
        self._last_step = {}

    def append(self, step, observable, value):
        last = self._last_step.get(observable)
        if last is not None and step <= last:
            raise ValueError(f"Step {step} for '{observable}' does not follow step {last}.")
        self._last_step[observable] = step
        self._records.append((int(step), observable, float(value)))

    @property
    def records(self):
        return list(self._records)

    def observables(self):
        return list(self._last_step)

    def steps(self, observable):
        return [step for step, name, _ in self._records if name == observable]

    def values(self, observable):
        return np.array([value for _, name, value in self._records if name == observable], dtype=np.float64)

    def only(self, observable):
        """The records of one observable as a new TimeSeries."""
        selected = TimeSeries()
        for step, name, value in self._records:
            if name == observable:
                selected.append(step, name, value)
        return selected

    def __len__(self):
        return len(self._records)


@dataclass
class Table:
    header: tuple
    rows: list = field(default_factory=list)

    def column(self, name):
        index = self.header.index(name)
        return [row[index] for row in self.rows]

    def __len__(self):
        return len(self.rows)


def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_csv(data, path):
    """Writes a TimeSeries or Table as UTF-8 CSV. Refuses empty data."""
    if isinstance(data, TimeSeries):
        header, rows = TIMESERIES_HEADER, data.records
    else:
        header, rows = data.header, data.rows
    if not rows:
        raise ValueError(f"Refusing to write an empty table to {path}.")

    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(value) for value in row])
    except OSError as e:
        raise OSError(e.errno, f"Could not write CSV ({e.strerror})", path) from e
    logging.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def _parse_cell(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path):
    """Reads an emitted CSV back; integer cells come back as int, numeric ones as float."""
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = tuple(next(reader))
            rows = [tuple(_parse_cell(cell) for cell in row) for row in reader if row]
    except StopIteration:
        raise ValueError(f"CSV file {path} has no header row.") from None
    except OSError as e:
        raise OSError(e.errno, f"Could not read CSV ({e.strerror})", path) from e
    return Table(header, rows)


def read_timeseries(path):
    table = read_table(path)
    if table.header != TIMESERIES_HEADER:
        raise ValueError(f"{path} is not a time series (header {table.header}).")
    series = TimeSeries()
    for step, observable, value in table.rows:
        series.append(step, str(observable), value)
    return series


def _jsonable(value):
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no inf/nan
        return value if math.isfinite(value) else str(value)
    return value


def write_summary(summary, path):
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_jsonable(summary), f, indent=4, sort_keys=True)
            f.write('\n')
    except OSError as e:
        raise OSError(e.errno, f"Could not write summary ({e.strerror})", path) from e
    logging.info(f"Summary written to {path}")
    return path

"""Post-processing helpers for result tables."""

from __future__ import annotations

import math

import numpy as np

from .results import ResultTable


def first_crossing(x, y, level: float) -> float:
    """Smallest ``x`` where ``y`` rises through ``level`` (linear interpolation).

    ``x`` need not be sorted. Returns ``nan`` when ``y`` never reaches
    ``level`` and ``x[0]`` when it already starts above.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if y.size == 0:
        return math.nan
    if y[0] >= level:
        return float(x[0])
    for i in range(1, y.size):
        if y[i] >= level:
            frac = (level - y[i - 1]) / (y[i] - y[i - 1])
            return float(x[i - 1] + frac * (x[i] - x[i - 1]))
    return math.nan


def error_crossing(table: ResultTable, snr_db: float, column: str = "abs_err_uncorr_db", level: float = 1.0) -> float:
    """Realized sigma_mdg (dB) at which the mean error at ``snr_db`` first exceeds ``level``."""
    rows = [r for r in table.aggregates if r["snr_db"] == snr_db and r.get(column) is not None]
    if not rows:
        raise KeyError(f"no aggregate rows at SNR {snr_db} dB with column {column!r}")
    return first_crossing(table.column("sigma_mdg_actual_db", rows), table.column(column, rows), level)


def error_matrix(table: ResultTable, column: str):
    """Plot-ready grid: ``(sigma_mdg_actual[sigma], snr_db[snr], values[sigma, snr])``."""
    aggs = table.aggregates
    n_sigma = 1 + max(r["sigma_index"] for r in aggs)
    n_snr = 1 + max(r["snr_index"] for r in aggs)
    vals = np.full((n_sigma, n_snr), np.nan)
    actual = np.full((n_sigma, n_snr), np.nan)
    snr = np.full(n_snr, np.nan)
    for r in aggs:
        i, j = r["sigma_index"], r["snr_index"]
        vals[i, j] = np.nan if r.get(column) is None else r[column]
        actual[i, j] = r["sigma_mdg_actual_db"]
        snr[j] = r["snr_db"]
    return np.nanmean(actual, axis=1), snr, vals

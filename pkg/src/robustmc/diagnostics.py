"""Trace diagnostics and their CSV emitters."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import autocovariance_sums


@dataclass
class AcfResult:
    lags: np.ndarray
    values: np.ndarray


@dataclass
class ErrorCurve:
    checkpoints: np.ndarray
    values: np.ndarray


def _series(x):
    if hasattr(x, "positions"):
        x = x.positions[:, 0]
    return np.asarray(x, dtype=float).reshape(-1)


def acf(series, max_lag: int) -> AcfResult:
    """Biased, mean-centred autocorrelation by direct summation."""
    x = _series(series)
    if max_lag < 0 or x.size <= max_lag:
        raise ValueError("series must be longer than max_lag")
    xc = x - x.mean()
    sums = autocovariance_sums(xc, max_lag)
    if sums[0] <= 0.0:
        raise ValueError("autocorrelation undefined for a constant series")
    return AcfResult(np.arange(max_lag + 1), sums / sums[0])


def integrated_autocorrelation_time(series) -> float:
    """Geyer initial positive sequence estimate of 1 + 2 sum_k rho_k."""
    x = _series(series)
    n = x.size
    xc = x - x.mean()
    rho = np.empty(0)
    tau = -1.0
    m = 0
    while True:
        if 2 * m + 1 >= rho.size:
            if rho.size >= n:
                break
            sums = autocovariance_sums(xc, min(n - 1, max(2 * rho.size, 64)))
            if sums[0] <= 0.0:
                raise ValueError("ESS undefined for a constant series")
            rho = sums / sums[0]
            if 2 * m + 1 >= rho.size:
                break
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        m += 1
    # floor so that anticorrelated chains report a large but finite ESS
    return max(tau, 1.0 / math.log10(max(n, 10)))


def ess(series) -> float:
    x = _series(series)
    return x.size / integrated_autocorrelation_time(x)


def acceptance_rate(trace) -> float:
    if getattr(trace, "n_iters", None):
        return trace.n_accepted / trace.n_iters
    acc = np.asarray(trace.accepted[1:], bool)
    return float(acc.mean()) if acc.size else 0.0


def summary(samples) -> dict:
    x = samples.positions if hasattr(samples, "positions") else np.asarray(samples, float)
    x = x.reshape(x.shape[0], -1)
    q05, q50, q95 = np.quantile(x, [0.05, 0.5, 0.95], axis=0)
    return {"mean": x.mean(0), "variance": x.var(0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1]),
            "q05": q05, "q50": q50, "q95": q95}


def _running_tail(item, threshold, checkpoints, coordinate):
    """p_hat at each checkpoint for one replicate.

    Arrays and traces use the first n samples; PDMP trajectories use the
    (clock-weighted) time average over segments whose end lies within the
    first n target evaluations."""
    if hasattr(item, "running_tail_estimate"):
        est = item.running_tail_estimate(coordinate, threshold)
        ends = item.evaluations[1:]
        idx = np.searchsorted(ends, checkpoints, side="right") - 1
        return np.where(idx >= 0, est[np.maximum(idx, 0)], 0.0)
    if callable(item):
        return np.array([item(n) for n in checkpoints])
    x = item.positions[:, coordinate] if hasattr(item, "positions") else np.asarray(item, float).reshape(-1)
    hits = np.cumsum(x >= threshold)
    n = np.minimum(np.asarray(checkpoints), x.size)
    return hits[n - 1] / n


def tail_error_curve(traces, threshold: float, true_prob: float, checkpoints, coordinate: int = 0) -> ErrorCurve:
    """Mean over replicates of ((p_hat_n - p) / p)^2."""
    cps = np.asarray(checkpoints, dtype=np.int64)
    if np.any(np.diff(cps) <= 0) or cps[0] < 1:
        raise ValueError("checkpoints must be positive and increasing")
    errs = np.array([((_running_tail(t, threshold, cps, coordinate) - true_prob) / true_prob) ** 2 for t in traces])
    return ErrorCurve(cps, errs.mean(axis=0))


def mse_expectation(traces, truth, checkpoints) -> ErrorCurve:
    """Mean over replicates and coordinates of (running mean - truth)^2."""
    cps = np.asarray(checkpoints, dtype=np.int64)
    truth = np.asarray(truth, float)
    vals = []
    for t in traces:
        x = t.positions if hasattr(t, "positions") else np.asarray(t, float).reshape(len(t), -1)
        run = np.cumsum(x, axis=0)[np.minimum(cps, x.shape[0]) - 1] / np.minimum(cps, x.shape[0])[:, None]
        vals.append(np.mean((run - truth) ** 2, axis=1))
    return ErrorCurve(cps, np.mean(vals, axis=0))


def fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else (str(c) if isinstance(c, (int, np.integer)) else fmt(c))
                        for c in r])


def write_acf_csv(path, result: AcfResult):
    write_csv(path, ["lag", "value"], zip(result.lags.tolist(), result.values))


def write_error_curve_csv(path, curve: ErrorCurve):
    write_csv(path, ["n", "mse"], zip(curve.checkpoints.tolist(), curve.values))


def write_summary_csv(path, stats: dict):
    rows = [(i, stats["mean"][i], stats["variance"][i], stats["q05"][i], stats["q50"][i], stats["q95"][i])
            for i in range(len(stats["mean"]))]
    write_csv(path, ["coordinate", "mean", "var", "q05", "q50", "q95"], rows)


def write_trace_csv(path, trace, max_coords: int = 10):
    d = min(trace.dim, max_coords)
    rows = ([int(it), "1" if a else "0", lp] + list(p[:d])
            for it, p, a, lp in zip(trace.iterations, trace.positions, trace.accepted, trace.log_density))
    write_csv(path, ["iteration", "accepted", "log_density"] + [f"x{i + 1}" for i in range(d)], rows)

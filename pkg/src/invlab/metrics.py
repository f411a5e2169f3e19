"""Point-forecast accuracy metrics, interval coverage and residual diagnostics."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.special import ndtri

# undefined metrics (zero actuals for MAPE, constant actuals for R^2) are None


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    mae: float
    mape: float | None
    mdape: float | None
    smape: float
    r2: float | None
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        names = [f.name for f in fields(self)]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        writer.writerow(["" if getattr(self, k) is None else repr(getattr(self, k)) for k in names])
        return buf.getvalue()


@dataclass(frozen=True)
class ResidualDiagnostics:
    histogram: list[tuple[float, float, int]]
    qq: list[tuple[float, float]]


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise ValueError("metrics need at least one observation")
    return a, p


def pointwise_metrics(actual, predicted) -> MetricsReport:
    a, p = _pair(actual, predicted)
    err = a - p
    abs_err = np.abs(err)
    mse = float(np.mean(err ** 2))
    if np.any(a == 0):
        mape = mdape = None
    else:
        with np.errstate(over="ignore"):
            ape = abs_err / np.abs(a)
        mape, mdape = float(np.mean(ape)), float(np.median(ape))
    denom = (np.abs(a) + np.abs(p)) / 2.0
    # both zero means a perfect forecast of zero
    sym = np.divide(abs_err, denom, out=np.zeros_like(abs_err), where=denom > 0)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    r2 = None if ss_tot == 0.0 else 1.0 - float(np.sum(err ** 2)) / ss_tot
    return MetricsReport(
        mse=mse,
        rmse=float(np.sqrt(mse)),
        mae=float(np.mean(abs_err)),
        mape=mape,
        mdape=mdape,
        smape=float(np.mean(sym)),
        r2=r2,
        n=int(a.size),
    )


def interval_coverage(actual, lower, upper) -> float:
    a = np.asarray(actual, dtype=float).ravel()
    lo = np.asarray(lower, dtype=float).ravel()
    hi = np.asarray(upper, dtype=float).ravel()
    if not (a.shape == lo.shape == hi.shape):
        raise ValueError("actual, lower and upper must have equal lengths")
    if a.size == 0:
        raise ValueError("coverage needs at least one observation")
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    return float(np.mean((lo <= a) & (a <= hi)))


def normal_quantile(p):
    """Inverse standard normal CDF."""
    return ndtri(np.asarray(p, dtype=float))


def residual_diagnostics(residuals, n_bins: int = 30) -> ResidualDiagnostics:
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("residual diagnostics need at least one residual")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    counts, edges = np.histogram(r, bins=n_bins)
    histogram = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(n_bins)]

    n = r.size
    theoretical = normal_quantile((np.arange(1, n + 1) - 0.5) / n)
    sd = r.std(ddof=1) if n > 1 else 0.0
    standardized = np.sort((r - r.mean()) / (sd if sd > 0 else 1.0))
    qq = [(float(q), float(v)) for q, v in zip(theoretical, standardized)]
    return ResidualDiagnostics(histogram=histogram, qq=qq)

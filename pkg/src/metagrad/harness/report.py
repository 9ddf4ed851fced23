"""Across-replicate aggregation and CSV / JSON output."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .runner import RunRecord, run_replicates

SCHEMA_VERSION = 1

# column order of the aggregate CSV (after optimizer, iteration, statistic)
COLUMNS = ("param", "param_error", "loss", "true_grad", "prop", "diff", "estimate", "est_error",
           "est_var", "est_sd", "alpha", "step")
STATISTICS = ("count", "mean", "var", "q05", "q25", "median", "q75", "q95")
CSV_HEADER = ("optimizer", "iteration", "statistic") + COLUMNS

CSV_HELP = (
    "CSV layout: one row per (optimizer, iteration, statistic). Columns: "
    + ", ".join(CSV_HEADER)
    + ". Statistics: " + ", ".join(STATISTICS)
    + ". Vector quantities refer to the tracked coordinate (--track-index); "
    "param_error is the L2 distance of the full parameter vector to the optimum."
)


def padded(records: list[RunRecord], column: str, index: int, iterations: int) -> np.ndarray:
    """Stack one column of every replicate into ``(replicates, iterations)``, NaN-padded."""
    out = np.full((len(records), iterations), np.nan)
    for r, rec in enumerate(records):
        n = len(rec)
        if not n:
            continue
        if column == "param":
            values = rec.params[:, index]
        elif column in ("loss", "param_error"):
            values = getattr(rec, column)
        elif column == "est_error":
            values = rec.estimate[:, index] - rec.true_grad[:, index]
        elif column == "est_sd":
            values = np.sqrt(rec.est_var[:, index])
        else:
            values = getattr(rec, column)[:, index]
        out[r, :n] = values
    return out


def describe(values: np.ndarray) -> dict[str, np.ndarray]:
    """Per-iteration statistics over replicates (axis 0), ignoring NaN."""
    count = np.sum(np.isfinite(values), axis=0).astype(float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        q = np.nanquantile(values, [0.05, 0.25, 0.5, 0.75, 0.95], axis=0)
        var = np.where(count > 1, np.nanvar(values, axis=0, ddof=1), 0.0)
        return {
            "count": count,
            "mean": np.nanmean(values, axis=0),
            "var": np.where(count > 0, var, np.nan),
            "q05": q[0], "q25": q[1], "median": q[2], "q75": q[3], "q95": q[4],
        }


def fmt(x: float) -> str:
    return "nan" if np.isnan(x) else format(float(x), ".17g")


@dataclass
class ExperimentReport:
    label: str
    config: ExperimentConfig
    records: list[RunRecord]
    table: dict[str, dict[str, np.ndarray]]

    @property
    def iterations(self) -> int:
        return self.config.iterations

    def column(self, name: str) -> np.ndarray:
        return padded(self.records, name, self.config.track_index, self.iterations)

    def status_counts(self) -> dict[str, int]:
        counts = {"completed": 0, "converged": 0, "diverged": 0}
        for rec in self.records:
            counts[rec.status] += 1
        return counts

    @property
    def all_diverged(self) -> bool:
        return all(rec.status == "diverged" for rec in self.records)

    def write_rows(self, writer):
        for i in range(self.iterations):
            for stat in STATISTICS:
                writer.writerow([self.label, i, stat] + [fmt(self.table[c][stat][i]) for c in COLUMNS])

    def summary(self) -> dict:
        median_err = self.table["param_error"]["median"]
        hits = np.flatnonzero(median_err <= self.config.converge_threshold)
        final_params = np.array([rec.params[-1, self.config.track_index] for rec in self.records if len(rec)])
        truth = self.config.build_problem().params_truth
        tracked_truth = None if truth is None else float(truth[self.config.track_index])
        finite = final_params[np.isfinite(final_params)]
        q25, q75 = np.percentile(finite, [25, 75]) if finite.size else (np.nan, np.nan)
        last = {rec.replicate: rec for rec in self.records}
        final_errors = [last[r].param_error[-1] for r in sorted(last) if len(last[r])]
        return {
            "label": self.label,
            "learning_rate": self.config.learning_rate,
            "replicates": len(self.records),
            "iterations": self.iterations,
            "status_counts": self.status_counts(),
            "final": {
                "median_param_error": _num(np.nanmedian(final_errors)) if final_errors else None,
                "median_abs_param_error": (None if tracked_truth is None or not finite.size
                                           else _num(np.median(np.abs(finite - tracked_truth)))),
                "param_median": _num(np.median(finite)) if finite.size else None,
                "param_iqr": _num(q75 - q25),
                "median_loss": _num(self.table["loss"]["median"][-1]),
            },
            "convergence_threshold": self.config.converge_threshold,
            "convergence_iteration": int(hits[0]) if hits.size else None,
        }


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def aggregate(label: str, config: ExperimentConfig, records: list[RunRecord]) -> ExperimentReport:
    table = {c: describe(padded(records, c, config.track_index, config.iterations)) for c in COLUMNS}
    return ExperimentReport(label, config, records, table)


def run_experiment(config: ExperimentConfig, label: str | None = None) -> ExperimentReport:
    """Run every replicate of ``config`` and aggregate per iteration."""
    return aggregate(label or config.optimizer, config, run_replicates(config))


def to_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        rep.write_rows(writer)
    return buf.getvalue()


def summary_json(reports: list[ExperimentReport], **extra) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiments": [dict(rep.summary(), config=rep.config.to_dict()) for rep in reports],
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True)


def write_text(path: str, text: str):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc

"""Scenario results, summaries and file output."""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ScenarioError(ValueError):
    pass


def summarize(samples) -> dict:
    if len(samples) == 0:
        return {"count": 0, "mean": None, "p50": None, "p94": None, "p99": None}
    arr = np.asarray(samples, dtype=float)
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "p50": float(np.percentile(arr, 50)),
        "p94": float(np.percentile(arr, 94)),
        "p99": float(np.percentile(arr, 99)),
    }


def cdf_points(samples) -> list[tuple[float, float]]:
    """(value, fraction <= value) at every distinct sample value."""
    if len(samples) == 0:
        return []
    arr = np.sort(np.asarray(samples, dtype=float))
    vals, idx = np.unique(arr, return_index=True)
    counts = np.append(idx[1:], arr.size)
    return [(float(v), float(c) / arr.size) for v, c in zip(vals, counts)]


@dataclass
class ScenarioResult:
    name: str
    samples: list[float]
    trace_lines: list[str] = field(default_factory=list, repr=False)
    tags: list[str] = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        out = summarize(self.samples)
        out.update(self.extra)
        return out

    @property
    def cdf(self) -> list[tuple[float, float]]:
        return cdf_points(self.samples)

    @property
    def trace_hash(self) -> str:
        h = hashlib.sha256()
        for line in self.trace_lines:
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    def tagged(self, tag: str) -> list[float]:
        return [s for s, t in zip(self.samples, self.tags) if t == tag]

    def mean(self, tag: str | None = None) -> float:
        vals = self.samples if tag is None else self.tagged(tag)
        return float(np.mean(vals)) if vals else float("nan")


def emit_results(result: ScenarioResult, path) -> dict[str, Path]:
    """Write samples CSV, summary JSON, CDF CSV and the trace; returns the paths."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ScenarioError(f"cannot write results to {out}: {e}") from None
    files = {
        "samples": out / f"{result.name}_samples.csv",
        "summary": out / f"{result.name}_summary.json",
        "cdf": out / f"{result.name}_cdf.csv",
        "trace": out / f"{result.name}_trace.ndjson",
    }
    with open(files["samples"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_ms"])
        for s in result.samples:
            w.writerow([repr(float(s))])
    summary = dict(result.summary, name=result.name, trace_hash=result.trace_hash)
    files["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    with open(files["cdf"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["latency_ms", "cumulative_fraction"])
        for v, frac in result.cdf:
            w.writerow([repr(v), repr(frac)])
    files["trace"].write_text("".join(line + "\n" for line in result.trace_lines))
    return files

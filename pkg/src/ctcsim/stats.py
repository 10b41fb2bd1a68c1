"""Histograms and the per-bin binomial acceptance bounds used for Monte-Carlo checks."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SIGMAS = 5.0


@dataclass(frozen=True)
class Histogram:
    """Counts (sampled) or exact probabilities over a fixed, ordered label set."""

    labels: tuple[str, ...]
    probabilities: np.ndarray
    counts: np.ndarray | None = None

    @classmethod
    def exact(cls, labels: Sequence[str], probabilities) -> "Histogram":
        p = np.asarray(probabilities, dtype=float)
        if p.shape != (len(labels),):
            raise ValueError("one probability per label required")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"not a probability vector: {p}")
        return cls(tuple(labels), np.clip(p, 0.0, None))

    @classmethod
    def from_samples(cls, labels: Sequence[str], samples: Iterable[str]) -> "Histogram":
        labels = tuple(labels)
        pos = {l: i for i, l in enumerate(labels)}
        counts = np.zeros(len(labels), dtype=np.int64)
        for s in samples:
            counts[pos[s]] += 1
        total = counts.sum()
        probs = counts / total if total else np.zeros(len(labels))
        return cls(labels, probs, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum()) if self.counts is not None else 0

    def __getitem__(self, label: str) -> float:
        return float(self.probabilities[self.labels.index(label)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "count", "probability"])
        for i, label in enumerate(self.labels):
            count = "" if self.counts is None else int(self.counts[i])
            w.writerow([label, count, repr(float(self.probabilities[i]))])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def read_csv(cls, path: str | Path) -> "Histogram":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        labels = tuple(r["label"] for r in rows)
        probs = np.array([float(r["probability"]) for r in rows])
        counts = None
        if rows and all(r["count"] != "" for r in rows):
            counts = np.array([int(r["count"]) for r in rows], dtype=np.int64)
        return cls(labels, probs, counts)


def tv_distance(p, q) -> float:
    p = np.asarray(getattr(p, "probabilities", p), dtype=float)
    q = np.asarray(getattr(q, "probabilities", q), dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def binomial_bounds(p, n: int, sigmas: float = SIGMAS) -> np.ndarray:
    """Per-bin tolerance ``sigmas * sqrt(p (1 - p) / n)`` on a frequency."""
    p = np.asarray(p, dtype=float)
    return sigmas * np.sqrt(p * (1.0 - p) / n)


def within_binomial(observed: Histogram, expected, sigmas: float = SIGMAS) -> bool:
    """Per-bin check of sampled frequencies against exact probabilities.

    Bins with expected probability 0 (or 1) get a zero-width bound, so any
    count in an impossible bin fails.
    """
    n = observed.total
    if n == 0:
        return False
    q = np.asarray(getattr(expected, "probabilities", expected), dtype=float)
    dev = np.abs(observed.probabilities - q)
    return bool(np.all(dev <= binomial_bounds(q, n, sigmas) + 1e-12))


def max_sigma_deviation(observed: Histogram, expected) -> float:
    """Largest per-bin deviation in units of the binomial standard error."""
    n = observed.total
    q = np.asarray(getattr(expected, "probabilities", expected), dtype=float)
    dev = np.abs(observed.probabilities - q)
    se = np.sqrt(q * (1.0 - q) / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / np.where(se > 0, se, 1.0), np.where(dev > 0, np.inf, 0.0))
    return float(z.max())

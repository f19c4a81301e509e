"""Scalar accuracy measures and grouped aggregation for surrogate evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def rel_l2(pred: np.ndarray, ref: np.ndarray) -> float:
    """Relative L2 error ||pred - ref|| / ||ref||."""
    pred = np.asarray(pred, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ValueError("pred and ref must have equal lengths")
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise ValueError("reference has zero norm")
    return float(np.linalg.norm(pred - ref) / denom)


def r2_score(pred: np.ndarray, ref: np.ndarray) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot."""
    pred = np.asarray(pred, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ValueError("pred and ref must have equal lengths")
    ss_tot = np.sum((ref - ref.mean()) ** 2)
    if ss_tot == 0:
        raise ValueError("reference is constant; R^2 undefined")
    return float(1.0 - np.sum((pred - ref) ** 2) / ss_tot)


@dataclass
class EvalReport:
    """Per-sample errors plus per-group and overall aggregates.

    Aggregates use the population standard deviation. R^2 is computed per
    sample over the output grid and then averaged.
    """

    rel_l2: np.ndarray
    r2: np.ndarray
    groups: list | None = None
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rel_l2 = np.asarray(self.rel_l2, dtype=float)
        self.r2 = np.asarray(self.r2, dtype=float)
        if self.rel_l2.shape != self.r2.shape:
            raise ValueError("per-sample metric arrays must align")
        if self.groups is not None and len(self.groups) != self.rel_l2.size:
            raise ValueError("group key count must match sample count")
        if not self.summary:
            self.summary = self._aggregate()

    def _aggregate(self) -> dict:
        overall = {
            "n": int(self.rel_l2.size),
            "rel_l2_mean": float(self.rel_l2.mean()),
            "rel_l2_std": float(self.rel_l2.std()),
            "r2_mean": float(self.r2.mean()),
            "r2_std": float(self.r2.std()),
        }
        out = {"overall": overall}
        if self.groups is not None:
            by_group = {}
            for key in sorted(set(map(str, self.groups))):
                mask = np.array([str(g) == key for g in self.groups])
                by_group[key] = {
                    "n": int(mask.sum()),
                    "rel_l2_mean": float(self.rel_l2[mask].mean()),
                    "rel_l2_std": float(self.rel_l2[mask].std()),
                    "r2_mean": float(self.r2[mask].mean()),
                    "r2_std": float(self.r2[mask].std()),
                }
            out["by_group"] = by_group
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["sample", "rel_l2", "r2"]
            if self.groups is not None:
                header.append("group")
            writer.writerow(header)
            for i in range(self.rel_l2.size):
                row = [i, f"{self.rel_l2[i]:.17g}", f"{self.r2[i]:.17g}"]
                if self.groups is not None:
                    row.append(str(self.groups[i]))
                writer.writerow(row)


def evaluate(pred: np.ndarray, ref: np.ndarray, groups: list | None = None) -> EvalReport:
    """Per-sample relative L2 and R^2 for row-aligned prediction matrices."""
    pred = np.atleast_2d(pred)
    ref = np.atleast_2d(ref)
    if pred.shape != ref.shape:
        raise ValueError("prediction and reference shapes differ")
    errs = np.array([rel_l2(p, r) for p, r in zip(pred, ref)])
    r2s = np.array([r2_score(p, r) for p, r in zip(pred, ref)])
    return EvalReport(rel_l2=errs, r2=r2s, groups=groups)


def aggregate(values: np.ndarray, groups: list | None = None) -> dict:
    """Mean and population std per group plus overall."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("nothing to aggregate")
    out = {"overall": {"n": int(values.size), "mean": float(values.mean()), "std": float(values.std())}}
    if groups is not None:
        if len(groups) != values.size:
            raise ValueError("group key count must match value count")
        by_group = {}
        for key in sorted(set(map(str, groups))):
            mask = np.array([str(g) == key for g in groups])
            by_group[key] = {
                "n": int(mask.sum()),
                "mean": float(values[mask].mean()),
                "std": float(values[mask].std()),
            }
        out["by_group"] = by_group
    return out

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CheckReport:
    """Per-item residuals of a verification pass; ``passed`` iff every residual <= tol."""

    labels: tuple[str, ...]
    residuals: np.ndarray
    tol: float
    measured: np.ndarray | None = None
    targets: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        res = np.asarray(self.residuals, dtype=float).reshape(-1)
        if res.size != len(self.labels):
            raise ValueError("one residual per label expected")
        if np.any(res < 0):
            raise ValueError("residuals are norms or absolute deviations and cannot be negative")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "residuals", res)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def failing(self) -> list[str]:
        return [lab for lab, r in zip(self.labels, self.residuals) if r > self.tol]

    def rows(self) -> list[dict]:
        out = []
        for i, lab in enumerate(self.labels):
            row = {"label": lab, "residual": float(self.residuals[i])}
            if self.measured is not None:
                row["measured"] = float(self.measured[i])
            if self.targets is not None:
                row["target"] = float(self.targets[i])
            out.append(row)
        return out

    @classmethod
    def merge(cls, reports: Sequence["CheckReport"], tol: float | None = None) -> "CheckReport":
        labels: list[str] = []
        res: list[float] = []
        for r in reports:
            labels.extend(r.labels)
            res.extend(r.residuals.tolist())
        if tol is None:
            tol = min((r.tol for r in reports), default=0.0)
        return cls(tuple(labels), np.asarray(res, dtype=float), tol)

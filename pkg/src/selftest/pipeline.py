"""End-to-end verification: conditions, operator identities, isometry and factorization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .conditions import (
    check,
    family_conditions,
    ghz_operator_identities,
    graph_anticommutation_check,
    tilted_chsh_operator_identities,
    w_operator_identities,
)
from .isometry import (
    extract_schmidt_operators,
    measurement_selftest_check,
    mixed_isometry_fidelity,
    run_isometry,
    schmidt_chain_check,
)
from .report import CheckReport
from .strategies import Strategy, normalize_params

DEFAULT_TOL = 1e-9
DEFAULT_FIDELITY_TOL = 1e-9
DEFAULT_MEASUREMENT_TOL = 1e-8


@dataclass
class VerifyResult:
    family: str
    params: dict
    conditions: CheckReport
    identities: CheckReport | None
    measurements: CheckReport | None
    fidelity: float | None
    junk_dims: tuple | None
    tol: float
    fidelity_tol: float
    notes: dict = field(default_factory=dict)

    @property
    def fidelity_ok(self) -> bool:
        return self.fidelity is not None and self.fidelity >= 1 - self.fidelity_tol

    @property
    def passed(self) -> bool:
        return self.conditions.passed and self.fidelity_ok

    def failing(self) -> list[str]:
        out = self.conditions.failing()
        if not self.fidelity_ok:
            out.append("isometry.fidelity")
        return out

    def to_dict(self) -> dict:
        def rows(r):
            return None if r is None else {"passed": r.passed, "tol": r.tol, "max_residual": r.max_residual,
                                            "rows": r.rows()}
        return {
            "family": self.family,
            "params": self.params,
            "passed": self.passed,
            "tol": self.tol,
            "fidelity_tol": self.fidelity_tol,
            "fidelity": self.fidelity,
            "junk_dims": None if self.junk_dims is None else list(self.junk_dims),
            "failing": self.failing(),
            "conditions": rows(self.conditions),
            "identities": rows(self.identities),
            "measurements": rows(self.measurements),
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "label", "measured", "target", "residual", "passed"])
        for section, rep in (("conditions", self.conditions), ("identities", self.identities),
                             ("measurements", self.measurements)):
            if rep is None:
                continue
            for row in rep.rows():
                w.writerow([section, row["label"], _fmt(row.get("measured")), _fmt(row.get("target")),
                            _fmt(row["residual"]), row["residual"] <= rep.tol])
        fid = self.fidelity
        w.writerow(["isometry", "fidelity", _fmt(fid), _fmt(1.0), _fmt(None if fid is None else abs(1 - fid)),
                    self.fidelity_ok])
        w.writerow(["summary", "passed", "", "", "", self.passed])
        return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def identity_report(strategy: Strategy, family: str, params: dict, tol: float) -> CheckReport | None:
    """Operator identities implied by the family's conditions, where the family has them."""
    if family == "tilted_chsh":
        return tilted_chsh_operator_identities(strategy, params["theta"], tol)
    if family == "ghz":
        return ghz_operator_identities(strategy, params["theta"], tol)
    if family == "w":
        return w_operator_identities(strategy, tol)
    if family == "graph":
        return graph_anticommutation_check(strategy, None, tol)
    if family == "schmidt":
        ops = extract_schmidt_operators(strategy, params["coeffs"])
        return schmidt_chain_check(strategy, ops, params["coeffs"], DEFAULT_MEASUREMENT_TOL)
    return None


def verify(strategy: Strategy, family: str | None = None, params: dict | None = None, *,
           tol: float = DEFAULT_TOL, fidelity_tol: float = DEFAULT_FIDELITY_TOL,
           measurement_tol: float = DEFAULT_MEASUREMENT_TOL) -> VerifyResult:
    """Run every check for ``family``; the verdict needs the conditions and the isometry fidelity.

    Family and parameters default to the strategy's header. Arity mismatches
    raise ValueError. A failing isometry extraction is reported as a failed
    verification.
    """
    if tol <= 0 or fidelity_tol <= 0:
        raise ValueError("tolerances must be positive")
    family = family or strategy.family
    if family is None:
        raise ValueError("no family given and the strategy carries none")
    if params is None:
        if strategy.family != family or strategy.params is None:
            raise ValueError(f"no parameters for family {family!r}")
        params = strategy.params
    params = normalize_params(family, params)
    conditions = family_conditions(family, params)
    report = check(strategy, conditions, tol)
    notes: dict = {}
    identities = measurements = None
    fidelity = junk_dims = None
    try:
        identities = identity_report(strategy, family, params, tol)
        run = run_isometry(strategy, family, params)
        junk_dims = run.factorization.junk_dims
        fidelity = mixed_isometry_fidelity(strategy, run)
        if fidelity is None:
            fidelity = run.factorization.target_fidelity
            notes["fidelity"] = "pure-state fidelity; the mixed-state batch exceeds the size limit"
        if run.factorization.junk_state is not None:
            measurements = measurement_selftest_check(strategy, family, params, run, measurement_tol)
    except ValueError as exc:
        notes["isometry_error"] = str(exc)
    return VerifyResult(family, params, report, identities, measurements, fidelity, junk_dims,
                        tol, fidelity_tol, notes)

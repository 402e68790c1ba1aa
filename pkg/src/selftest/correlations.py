"""Correlation data of a strategy: probability tables, correlators and Bell values.

A strategy is anything with ``state`` (a :class:`~selftest.tensor.StateVector`),
``measurements`` (per party, a tuple of :class:`~selftest.observables.PVM`)
and ``white_noise``. With ``white_noise = eps`` every expectation is taken in
``(1 - eps)|psi><psi| + eps I/D``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .observables import PVM, ideal_ghz_measurements, schmidt_angles, tilted_chsh_max
from .report import CheckReport
from .states import ghz_amplitudes, validate_schmidt
from .tensor import apply_local

if TYPE_CHECKING:
    from .strategies import Strategy

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Local:
    """Linear combination of one party's operators.

    Each atom is ``(coeff, kind, setting, outcome)`` with ``kind`` one of
    ``"id"`` (identity), ``"obs"`` (the ±1 observable of a two-outcome
    setting) or ``"proj"`` (the projector of one outcome).
    """

    atoms: tuple[tuple[float, str, int, int], ...]

    def __post_init__(self):
        atoms = tuple((float(c), str(k), int(x), int(a)) for c, k, x, a in self.atoms)
        for _, kind, _, _ in atoms:
            if kind not in ("id", "obs", "proj"):
                raise ValueError(f"unknown operator kind {kind!r}")
        object.__setattr__(self, "atoms", atoms)

    def __add__(self, other: "Local") -> "Local":
        return Local(self.atoms + other.atoms)

    def __sub__(self, other: "Local") -> "Local":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "Local":
        return Local(tuple((scalar * c, k, x, a) for c, k, x, a in self.atoms))

    def __neg__(self) -> "Local":
        return (-1.0) * self

    @property
    def is_identity(self) -> bool:
        return all(k == "id" for _, k, _, _ in self.atoms)

    def settings_used(self) -> set[int]:
        return {x for _, k, x, _ in self.atoms if k != "id"}

    def matrix(self, settings: Sequence[PVM], dim: int) -> np.ndarray:
        out = np.zeros((dim, dim), dtype=complex)
        for c, kind, x, a in self.atoms:
            if kind == "id":
                out += c * np.eye(dim)
                continue
            if not 0 <= x < len(settings):
                raise ValueError(f"setting {x} not available (party has {len(settings)})")
            pvm = settings[x]
            if kind == "obs":
                out += c * pvm.observable()
            else:
                if not 0 <= a < pvm.n_outcomes:
                    raise ValueError(f"outcome {a} not available for setting {x}")
                out += c * pvm.projectors[a]
        return out

    def trace(self, settings: Sequence[PVM], dim: int) -> float:
        return float(np.real(np.trace(self.matrix(settings, dim))))

    def to_json(self) -> list:
        return [list(a) for a in self.atoms]

    @classmethod
    def from_json(cls, data) -> "Local":
        return cls(tuple(tuple(a) for a in data))


def ident() -> Local:
    return Local(((1.0, "id", 0, 0),))


def obs(x: int) -> Local:
    return Local(((1.0, "obs", x, 0),))


def proj(x: int, a: int) -> Local:
    return Local(((1.0, "proj", x, a),))


def binary_proj(x: int, sign: int) -> Local:
    """``(I + sign * A_x)/2`` written through the observable, i.e. the ``sign`` eigenprojector."""
    return 0.5 * ident() + (0.5 * sign) * obs(x)


Factors = tuple  # tuple of (party, Local) sorted by party


def _factors(mapping: Mapping[int, Local]) -> Factors:
    return tuple(sorted((int(p), f) for p, f in mapping.items()))


@dataclass(frozen=True)
class CorrelatorSpec:
    """Target value for ``<psi| sum_t coeff_t ⊗_p factor_{t,p} |psi>``."""

    label: str
    terms: tuple[tuple[float, Factors], ...]
    target: float

    def __post_init__(self):
        if not self.terms:
            raise ValueError(f"{self.label}: a correlator needs at least one term")
        if all(all(f.is_identity for _, f in factors) for _, factors in self.terms):
            raise ValueError(f"{self.label}: correlator has no non-identity entry")

    @classmethod
    def product(cls, label: str, factors: Mapping[int, Local], target: float) -> "CorrelatorSpec":
        return cls(label, ((1.0, _factors(factors)),), float(target))

    @classmethod
    def combination(cls, label: str, terms: Iterable[tuple[float, Mapping[int, Local]]],
                    target: float) -> "CorrelatorSpec":
        return cls(label, tuple((float(c), _factors(f)) for c, f in terms), float(target))

    def parties(self) -> set[int]:
        return {p for _, factors in self.terms for p, _ in factors}

    def conditioned(self, factors: Mapping[int, Local], label: str | None = None,
                    target: float | None = None) -> "CorrelatorSpec":
        """Multiply every term by extra factors on parties the spec does not touch."""
        overlap = self.parties() & set(factors)
        if overlap:
            raise ValueError(f"parties {sorted(overlap)} already carry operators")
        terms = tuple((c, _factors({**dict(fs), **factors})) for c, fs in self.terms)
        return CorrelatorSpec(label or self.label, terms, self.target if target is None else target)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "target": self.target,
            "terms": [
                {"coeff": c, "factors": {str(p): f.to_json() for p, f in factors}}
                for c, factors in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CorrelatorSpec":
        terms = tuple(
            (float(t["coeff"]), _factors({int(p): Local.from_json(f) for p, f in t["factors"].items()}))
            for t in data["terms"]
        )
        return cls(data["label"], terms, float(data["target"]))


@dataclass(frozen=True)
class CorrelationTable:
    """``probs[a_1, ..., a_N] = p(a | question)``."""

    question: tuple[int, ...]
    probs: np.ndarray

    def outcome_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(n) for n in self.probs.shape)))

    def validate(self, tol: float = 1e-10) -> None:
        if self.probs.min(initial=0) < -1e-12:
            raise ValueError(f"negative probability {self.probs.min()} in table {self.question}")
        if abs(self.probs.sum() - 1) > tol:
            raise ValueError(f"table {self.question} sums to {self.probs.sum()!r}")


def check_question(strategy, question: Sequence[int]) -> tuple[int, ...]:
    q = tuple(int(x) for x in question)
    if len(q) != len(strategy.measurements):
        raise ValueError(f"question {q} has {len(q)} entries for {len(strategy.measurements)} parties")
    for p, x in enumerate(q):
        if not 0 <= x < len(strategy.measurements[p]):
            raise ValueError(f"party {p} has no setting {x}")
    return q


def table_from_parts(amplitudes: np.ndarray, dims: Sequence[int], pvms: Sequence[PVM],
                     white_noise: float = 0.0) -> np.ndarray:
    """Probability array over outcome tuples for one PVM per party."""
    dims = tuple(dims)
    n = len(dims)
    t = np.asarray(amplitudes, dtype=complex).reshape(dims)
    # after party p is processed the layout is (o_0, s_0, ..., o_p, s_p, s_{p+1}, ...)
    for p, pvm in enumerate(pvms):
        if pvm.dim != dims[p]:
            raise ValueError(f"party {p}: measurement dimension {pvm.dim} vs state dimension {dims[p]}")
        t = np.tensordot(pvm.projectors, t, axes=([2], [2 * p]))
        t = np.moveaxis(t, [0, 1], [2 * p, 2 * p + 1])
    t = np.transpose(t, list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    shape_out = tuple(pvm.n_outcomes for pvm in pvms)
    probs = np.sum(np.abs(t.reshape(shape_out + (-1,))) ** 2, axis=-1)
    if white_noise:
        traces = [np.real(np.einsum("aii->a", pvm.projectors)) for pvm in pvms]
        flat = traces[0]
        for tr in traces[1:]:
            flat = np.multiply.outer(flat, tr)
        probs = (1 - white_noise) * probs + white_noise * flat / int(np.prod(dims))
    assert probs.ndim == n
    return probs


def probability_table(strategy: "Strategy", question: Sequence[int]) -> CorrelationTable:
    q = check_question(strategy, question)
    pvms = [strategy.measurements[p][x] for p, x in enumerate(q)]
    probs = table_from_parts(strategy.state.amplitudes, strategy.state.dims, pvms, strategy.white_noise)
    table = CorrelationTable(q, probs)
    table.validate()
    return table


def all_questions(strategy) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(len(s)) for s in strategy.measurements)))


class _Evaluator:
    """Caches local matrices so repeated specs on one strategy stay cheap."""

    def __init__(self, strategy):
        self.strategy = strategy
        self.dims = strategy.state.dims
        self.psi = strategy.state.tensor()
        self.eps = float(strategy.white_noise)
        self._cache: dict[tuple[int, Local], np.ndarray] = {}

    def local(self, party: int, f: Local) -> np.ndarray:
        key = (party, f)
        if key not in self._cache:
            if not 0 <= party < len(self.dims):
                raise ValueError(f"party {party} does not exist")
            self._cache[key] = f.matrix(self.strategy.measurements[party], self.dims[party])
        return self._cache[key]

    def term(self, factors: Factors) -> complex:
        t = self.psi
        tr = 1.0
        for p, f in factors:
            m = self.local(p, f)
            t = apply_local(m, p, t)
            if self.eps:
                tr *= np.trace(m)
        val = np.vdot(self.psi, t)
        if self.eps:
            touched = {p for p, _ in factors}
            for p, d in enumerate(self.dims):
                if p not in touched:
                    tr *= d
            val = (1 - self.eps) * val + self.eps * tr / int(np.prod(self.dims))
        return complex(val)

    def spec(self, spec: CorrelatorSpec) -> float:
        val = sum(c * self.term(factors) for c, factors in spec.terms)
        if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
            raise ValueError(f"{spec.label}: expectation has imaginary part {val.imag:.3e}; "
                             "the operator is not Hermitian")
        return float(val.real)


def correlator(strategy: "Strategy", spec: CorrelatorSpec) -> float:
    return _Evaluator(strategy).spec(spec)


def evaluate_specs(strategy: "Strategy", specs: Sequence[CorrelatorSpec]) -> np.ndarray:
    ev = _Evaluator(strategy)
    return np.array([ev.spec(s) for s in specs], dtype=float)


def tilted_chsh_terms(pair: tuple[int, int], alpha: float,
                      sign_flips: tuple[bool, bool] = (False, False)) -> list:
    """Terms of ``alpha A0 + A0 B0 + A0 B1 + A1 B0 - A1 B1`` with optional ``A1 -> -A1`` / ``B1 -> -B1``."""
    i, j = pair
    if i == j:
        raise ValueError("the two parties must differ")
    sa = -1.0 if sign_flips[0] else 1.0
    sb = -1.0 if sign_flips[1] else 1.0
    terms = [
        (1.0, {i: obs(0), j: obs(0)}),
        (sb, {i: obs(0), j: obs(1)}),
        (sa, {i: obs(1), j: obs(0)}),
        (-sa * sb, {i: obs(1), j: obs(1)}),
    ]
    if alpha:
        terms.insert(0, (float(alpha), {i: obs(0)}))
    return terms


def tilted_chsh_spec(pair: tuple[int, int], alpha: float,
                     sign_flips: tuple[bool, bool] = (False, False), label: str | None = None,
                     target: float | None = None) -> CorrelatorSpec:
    return CorrelatorSpec.combination(
        label or f"tilted_chsh[{pair[0]},{pair[1]}]",
        tilted_chsh_terms(pair, alpha, sign_flips),
        tilted_chsh_max(alpha) if target is None else target,
    )


def _check_binary_pair(strategy, parties: Iterable[int]) -> None:
    for p in parties:
        settings = strategy.measurements[p]
        if len(settings) < 2 or any(s.n_outcomes != 2 for s in settings[:2]):
            raise ValueError(f"party {p} needs two binary settings for a CHSH expression")


def tilted_chsh_value(strategy: "Strategy", parties: tuple[int, int], alpha: float,
                      sign_flips: tuple[bool, bool] = (False, False)) -> float:
    _check_binary_pair(strategy, parties)
    return correlator(strategy, tilted_chsh_spec(parties, alpha, sign_flips))


def conditional_chsh_spec(projections: Mapping[int, int], pair: tuple[int, int], alpha: float,
                          setting: int = 1, target: float | None = None,
                          label: str | None = None) -> CorrelatorSpec:
    """Bell operator on ``pair`` times outcome projectors of ``setting`` on the other parties.

    The parity of the ``1`` outcomes in ``projections`` flips the sign of the
    first party's second observable, which is the relabelling that turns each
    projected state into a standard tilted CHSH configuration.
    """
    if set(projections) & set(pair):
        raise ValueError("projecting parties overlap with the CHSH pair")
    parity = sum(projections.values()) % 2 == 1
    base = tilted_chsh_spec(pair, alpha, (parity, False))
    cond = {p: proj(setting, a) for p, a in projections.items()}
    return base.conditioned(cond, label=label or f"conditional_chsh[{dict(projections)}]",
                            target=base.target if target is None else target)


def conditional_chsh(strategy: "Strategy", projecting_parties: Iterable[int], outcome_pattern: Sequence[int],
                     pair: tuple[int, int], alpha: float, setting: int = 1) -> float:
    projecting_parties = list(projecting_parties)
    if len(projecting_parties) != len(outcome_pattern):
        raise ValueError("one outcome per projecting party expected")
    _check_binary_pair(strategy, pair)
    spec = conditional_chsh_spec(dict(zip(projecting_parties, outcome_pattern)), pair, alpha, setting)
    return correlator(strategy, spec)


# ---------------------------------------------------------------------------
# Block structure of Schmidt-state correlations


def ghz_reference_table(n: int, theta: float, question: Sequence[int]) -> np.ndarray:
    """Table of the ideal qubit GHZ strategy at any angle in (0, pi/2)."""
    pvms = ideal_ghz_measurements(n, theta)
    return table_from_parts(ghz_amplitudes(n, theta), (2,) * n, [pvms[p][x] for p, x in enumerate(question)])


def schmidt_questions(n: int) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Questions {0,1}^N and the shifted set (x_i in {0,2}, last party in {2,3})."""
    plain = list(itertools.product((0, 1), repeat=n))
    shifted = [tuple(2 * b for b in bits[:-1]) + (2 + bits[-1],) for bits in plain]
    return plain, shifted


def expected_schmidt_table(c: Sequence[float], n: int, question: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Expected table and a mask of the entries that lie inside a block."""
    c = validate_schmidt(c)
    d = c.size
    odd = d % 2 == 1
    q = tuple(question)
    thetas, primes = schmidt_angles(c)
    expected = np.zeros((d,) * n)
    mask = np.zeros((d,) * n, dtype=bool)
    if all(x in (0, 1) for x in q):
        for m, th in enumerate(thetas):
            basis = (2 * m, 2 * m + 1)
            weight = c[2 * m] ** 2 + c[2 * m + 1] ** 2
            ref = ghz_reference_table(n, th, q)
            for bits in itertools.product((0, 1), repeat=n):
                idx = tuple(basis[b] for b in bits)
                expected[idx] = weight * ref[bits]
                mask[idx] = True
        if odd:
            expected[(d - 1,) * n] = c[d - 1] ** 2
            mask[(d - 1,) * n] = True
    elif all(x in (0, 2) for x in q[:-1]) and q[-1] in (2, 3):
        ghz_q = tuple(x // 2 for x in q[:-1]) + (q[-1] - 2,)
        for m, th in enumerate(primes):
            basis = (2 * m + 1, (2 * m + 2) % d)
            weight = c[basis[0]] ** 2 + c[basis[1]] ** 2
            ref = ghz_reference_table(n, th, ghz_q)
            for bits in itertools.product((0, 1), repeat=n):
                idx = tuple(basis[b] for b in bits)
                expected[idx] = weight * ref[bits]
                mask[idx] = True
        if odd:
            expected[(0,) * n] = c[0] ** 2
            mask[(0,) * n] = True
    else:
        raise ValueError(f"question {q} is not constrained by the block structure")
    return expected, mask


def block_structure_check(tables: Mapping[tuple[int, ...], CorrelationTable], c: Sequence[float],
                          tol: float = 1e-9) -> CheckReport:
    """Compare tables against the block-diagonal form built from GHZ reference tables.

    Reports two residuals per question: the largest deviation inside the
    blocks and the largest entry outside them.
    """
    c = validate_schmidt(c)
    labels, residuals = [], []
    for q in sorted(tables):
        table = tables[q]
        n = len(q)
        expected, mask = expected_schmidt_table(c, n, q)
        if table.probs.shape != expected.shape:
            raise ValueError(f"table for {q} has shape {table.probs.shape}, expected {expected.shape}")
        diff = np.abs(table.probs - expected)
        qs = "".join(str(x) for x in q)
        labels.append(f"schmidt.block[x={qs}]")
        residuals.append(float(diff[mask].max(initial=0)))
        labels.append(f"schmidt.off_block[x={qs}]")
        residuals.append(float(diff[~mask].max(initial=0)))
    return CheckReport(tuple(labels), np.array(residuals), tol)


# ---------------------------------------------------------------------------
# Export


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def tables_to_csv(tables: Sequence[CorrelationTable]) -> str:
    outcomes: list[tuple[int, ...]] = []
    seen = set()
    for t in tables:
        for a in t.outcome_tuples():
            if a not in seen:
                seen.add(a)
                outcomes.append(a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["question"] + [" ".join(map(str, a)) for a in outcomes])
    for t in tables:
        row = [" ".join(map(str, t.question))]
        for a in outcomes:
            inside = all(ai < s for ai, s in zip(a, t.probs.shape))
            row.append(_fmt(t.probs[a]) if inside else "")
        w.writerow(row)
    return buf.getvalue()


def tables_from_csv(text: str) -> list[CorrelationTable]:
    rows = list(csv.reader(io.StringIO(text)))
    header = [tuple(int(v) for v in h.split()) for h in rows[0][1:]]
    shape = tuple(max(a[p] for a in header) + 1 for p in range(len(header[0])))
    out = []
    for row in rows[1:]:
        q = tuple(int(v) for v in row[0].split())
        probs = np.zeros(shape)
        for a, cell in zip(header, row[1:]):
            if cell:
                probs[a] = float(cell)
        out.append(CorrelationTable(q, probs))
    return out


def tables_to_json(tables: Sequence[CorrelationTable]) -> str:
    data = [
        {"question": list(t.question), "shape": list(t.probs.shape), "probs": t.probs.reshape(-1).tolist()}
        for t in tables
    ]
    return json.dumps({"tables": data}, indent=1)


def tables_from_json(text: str) -> list[CorrelationTable]:
    data = json.loads(text)
    return [
        CorrelationTable(tuple(t["question"]), np.asarray(t["probs"], dtype=float).reshape(t["shape"]))
        for t in data["tables"]
    ]

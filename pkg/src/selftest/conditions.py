"""Self-testing condition sets for each state family and the operator identities they imply.

A :class:`ConditionSet` is plain data: an ordered list of
:class:`~selftest.correlations.CorrelatorSpec` with target values. ``check``
evaluates it against a strategy. The ``*_identities`` functions work on the
state vector directly and return vector-norm residuals.
"""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .correlations import (
    CorrelatorSpec,
    Local,
    _Evaluator,
    binary_proj,
    conditional_chsh_spec,
    ident,
    obs,
    probability_table,
    proj,
    schmidt_questions,
    block_structure_check,
    tilted_chsh_spec,
)
from .observables import alpha_from_theta, extract_zx, mu_from_theta, tilted_chsh_max
from .report import CheckReport
from .states import Graph, neighbors, pair_neighbors, validate_schmidt
from .tensor import apply_local

DEFAULT_TOL = 1e-9
FAMILIES = ("tilted_chsh", "ghz", "schmidt", "w", "dicke", "graph")


@dataclass(frozen=True)
class ConditionSet:
    family: str
    params: dict
    specs: tuple[CorrelatorSpec, ...]
    # settings needed per party; used for the arity check
    n_settings: tuple[int, ...] = ()
    n_outcomes: tuple[int, ...] = ()
    notes: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.specs)

    def labels(self) -> list[str]:
        return [s.label for s in self.specs]

    def to_json(self) -> str:
        return json.dumps({
            "family": self.family,
            "params": self.params,
            "n_settings": list(self.n_settings),
            "n_outcomes": list(self.n_outcomes),
            "specs": [s.to_json() for s in self.specs],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ConditionSet":
        data = json.loads(text)
        return cls(data["family"], data["params"], tuple(CorrelatorSpec.from_json(s) for s in data["specs"]),
                   tuple(data.get("n_settings", ())), tuple(data.get("n_outcomes", ())))


def _spec(label: str, terms: Iterable[tuple[float, Mapping[int, Local]]], target: float) -> CorrelatorSpec | None:
    """Build a spec, or return None when every term is the identity (a tautology)."""
    terms = [(c, dict(f)) for c, f in terms]
    if all(all(loc.is_identity for loc in f.values()) for _, f in terms):
        return None
    return CorrelatorSpec.combination(label, terms, target)


def _bits(pattern: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in pattern)


# ---------------------------------------------------------------------------
# GHZ(theta)


def ghz_conditions(n: int, theta: float) -> ConditionSet:
    """Marginal, pair, projected-norm and projected tilted-CHSH conditions for GHZ_N(theta)."""
    if n < 3:
        raise ValueError("GHZ conditions need N >= 3; use tilted_chsh_conditions for two parties")
    alpha = alpha_from_theta(theta)
    c2 = float(np.cos(theta) ** 2)
    specs: list[CorrelatorSpec] = []
    for i in range(n - 1):
        specs.append(CorrelatorSpec.product(f"ghz.marginal[{i}]", {i: proj(0, 0)}, c2))
    last_z = n - 2
    for i in range(n - 2):
        specs.append(CorrelatorSpec.product(f"ghz.pair[{i},{last_z}]", {i: proj(0, 0), last_z: proj(0, 0)}, c2))
    patterns = list(itertools.product((0, 1), repeat=n - 2))
    weight = 1.0 / 2 ** (n - 2)
    for a in patterns:
        specs.append(CorrelatorSpec.product(
            f"ghz.projected_norm[a={_bits(a)}]", {i: proj(1, ai) for i, ai in enumerate(a)}, weight))
    for a in patterns:
        specs.append(conditional_chsh_spec(
            dict(enumerate(a)), (n - 2, n - 1), alpha, setting=1,
            target=tilted_chsh_max(alpha) * weight, label=f"ghz.projected_bell[a={_bits(a)}]"))
    return ConditionSet("ghz", {"n": n, "theta": float(theta)}, tuple(specs), (2,) * n, (2,) * n)


def tilted_chsh_conditions(theta: float) -> ConditionSet:
    alpha = alpha_from_theta(theta)
    spec = tilted_chsh_spec((0, 1), alpha, label="tilted_chsh.bell")
    return ConditionSet("tilted_chsh", {"theta": float(theta)}, (spec,), (2, 2), (2, 2))


def _obs_matrix(strategy, party: int, setting: int) -> np.ndarray:
    return strategy.measurements[party][setting].observable()


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def tilted_chsh_operator_identities(strategy, theta: float, tol: float = DEFAULT_TOL,
                                    zero_tol: float = 1e-10) -> CheckReport:
    """Residuals of ``Z_A psi = Z_B psi`` and ``cos X_A (1 - Z_A) psi = sin X_B (1 + Z_A) psi``."""
    if len(strategy.measurements) != 2:
        raise ValueError("the tilted CHSH identities concern two parties")
    mu = mu_from_theta(theta)
    psi = strategy.state.tensor()
    za, xa = _obs_matrix(strategy, 0, 0), _obs_matrix(strategy, 0, 1)
    zb, xb = extract_zx(_obs_matrix(strategy, 1, 0), _obs_matrix(strategy, 1, 1), mu, zero_tol)
    r4 = apply_local(za, 0, psi) - apply_local(zb, 1, psi)
    minus = psi - apply_local(za, 0, psi)
    plus = psi + apply_local(za, 0, psi)
    r5 = np.cos(theta) * apply_local(xa, 0, minus) - np.sin(theta) * apply_local(xb, 1, plus)
    return CheckReport(("tilted_chsh.z_agree", "tilted_chsh.x_relation"),
                       np.array([_norm(r4), _norm(r5)]), tol)


def ghz_local_operators(strategy, theta: float, zero_tol: float = 1e-10):
    """Z_i, X_i per party: settings 0/1 verbatim for parties < N, regularized combinations for the last."""
    n = len(strategy.measurements)
    zs, xs = [], []
    for p in range(n - 1):
        zs.append(_obs_matrix(strategy, p, 0))
        xs.append(_obs_matrix(strategy, p, 1))
    z, x = extract_zx(_obs_matrix(strategy, n - 1, 0), _obs_matrix(strategy, n - 1, 1), mu_from_theta(theta), zero_tol)
    zs.append(z)
    xs.append(x)
    return zs, xs


def ghz_operator_identities(strategy, theta: float, tol: float = DEFAULT_TOL) -> CheckReport:
    """``Z_1 psi = ... = Z_N psi`` and ``X_1...X_N (1 - Z_1) psi = tan(theta) (1 + Z_1) psi``."""
    n = len(strategy.measurements)
    zs, xs = ghz_local_operators(strategy, theta)
    psi = strategy.state.tensor()
    z0 = apply_local(zs[0], 0, psi)
    labels, res = [], []
    for j in range(1, n):
        labels.append(f"ghz.z_agree[0,{j}]")
        res.append(_norm(z0 - apply_local(zs[j], j, psi)))
    lhs = psi - z0
    for p in range(n):
        lhs = apply_local(xs[p], p, lhs)
    rhs = np.tan(theta) * (psi + z0)
    labels.append("ghz.x_chain")
    res.append(_norm(lhs - rhs))
    return CheckReport(tuple(labels), np.array(res), tol)


# ---------------------------------------------------------------------------
# W and Dicke


def _last_z() -> Local:
    """``(D + E)/sqrt2`` for a party measuring the CHSH-optimal pair."""
    return (1 / np.sqrt(2)) * (obs(0) + obs(1))


def _last_x() -> Local:
    return (1 / np.sqrt(2)) * (obs(0) - obs(1))


def _z_proj(party: int, last: int, bit: int) -> Local:
    """``Z^{(bit)} = (1 + (-1)^bit Z)/2`` on a Pauli party or on the last party."""
    if party == last:
        return 0.5 * ident() + (0.5 * (-1) ** bit) * _last_z()
    return proj(0, bit)


def _w_terms(others: Sequence[int], last: int, prefix: str):
    """W-state conditions on ``others + [last]`` as (label, terms, target) triples."""
    m = len(others) + 1
    out = []
    for i in others:
        rest = [l for l in others if l != i]
        zplus = {l: proj(0, 0) for l in rest}
        out.append((f"{prefix}.marginal[{i}]", [(1.0, zplus)], 2 / m))
        bell = [
            (1.0, {**zplus, i: obs(0), last: obs(0)}),
            (1.0, {**zplus, i: obs(0), last: obs(1)}),
            (1.0, {**zplus, i: obs(1), last: obs(0)}),
            (-1.0, {**zplus, i: obs(1), last: obs(1)}),
        ]
        out.append((f"{prefix}.projected_bell[{i}]", bell, 4 * np.sqrt(2) / m))
        out.append((f"{prefix}.excitation[{i}]", [(1.0, {i: proj(0, 1)})], 1 / m))
        out.append((f"{prefix}.single_excitation[{i}]", [(1.0, {**zplus, i: proj(0, 1)})], 1 / m))
    return out


def w_conditions(n: int) -> ConditionSet:
    if n < 3:
        raise ValueError("W conditions need N >= 3")
    specs = [_spec(lab, terms, t) for lab, terms, t in _w_terms(range(n - 1), n - 1, "w")]
    return ConditionSet("w", {"n": n}, tuple(s for s in specs if s is not None), (2,) * n, (2,) * n)


def flip_local(f: Local, is_last: bool) -> Local:
    """Rewrite a local operator after conjugating the party by sigma_x.

    Pauli parties: ``Z -> -Z`` so the Z-outcomes swap and X stays. The last
    party's CHSH-optimal pair maps as ``D -> -E`` and ``E -> -D``.
    """
    atoms = []
    for c, kind, x, a in f.atoms:
        if kind == "id":
            atoms.append((c, kind, x, a))
        elif not is_last:
            if x != 0:
                atoms.append((c, kind, x, a))
            elif kind == "obs":
                atoms.append((-c, kind, x, a))
            else:
                atoms.append((c, kind, x, 1 - a))
        else:
            y = 1 - x
            if kind == "obs":
                atoms.append((-c, kind, y, a))
            else:
                atoms.append((c, kind, y, 1 - a))
    return Local(tuple(atoms))


def flip_spec(spec: CorrelatorSpec, last: int, label: str | None = None) -> CorrelatorSpec:
    terms = tuple(
        (c, tuple((p, flip_local(f, p == last)) for p, f in factors))
        for c, factors in spec.terms
    )
    return CorrelatorSpec(label or spec.label, terms, spec.target)


def _dicke_core(n: int, k: int, prefix: str) -> list[CorrelatorSpec]:
    """Conditions for ``sigma_x^(last)|D_N^k>`` when ``k >= floor(N/2)``."""
    last = n - 1
    specs: list[CorrelatorSpec] = []
    weight = (k + 1) / comb(n, k)
    for subset in itertools.combinations(range(n - 1), n - k - 1):
        remaining = [p for p in range(n - 1) if p not in subset]
        cond = {p: proj(0, 0) for p in subset}
        tag = _bits(1 if p in subset else 0 for p in range(n - 1))
        for lab, terms, target in _w_terms(remaining, last, f"{prefix}.projected_w[S={tag}]"):
            # the flip acts on the remaining parties only; the projection on S stays Z = +1
            flipped = [(c, {p: flip_local(f_p, p == last) for p, f_p in f.items()}) for c, f in terms]
            spec = _spec(lab, [(c, {**f, **cond}) for c, f in flipped], weight * target)
            if spec is not None:
                specs.append(spec)
    for ones in itertools.combinations(range(n - 1), k + 1):
        for t_last in (0, 1):
            tau = [1 if p in ones else 0 for p in range(n - 1)] + [t_last]
            factors = {p: _z_proj(p, last, b) for p, b in enumerate(tau)}
            specs.append(CorrelatorSpec.product(f"{prefix}.zero[tau={_bits(tau)}]", factors, 0.0))
    return specs


def dicke_conditions(n: int, k: int) -> ConditionSet:
    """Conditions self-testing ``sigma_x^(last)|D_N^k>``.

    For ``k >= floor(N/2)`` every (N-k-1)-subset of the first N-1 parties is
    projected on Z = +1 and the rest must look like a bit-flipped W state; then
    all patterns with k+1 ones among the first N-1 parties must vanish. Smaller
    k use the conditions for N-k with every party conjugated by sigma_x,
    since ``|D_N^k> = sigma_x^{⊗N}|D_N^{N-k}>``.
    """
    if n < 3:
        raise ValueError("Dicke conditions need N >= 3")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} outside 1..N-1")
    if k >= n // 2:
        specs = _dicke_core(n, k, "dicke")
    else:
        specs = [flip_spec(s, n - 1) for s in _dicke_core(n, n - k, "dicke.complement")]
    return ConditionSet("dicke", {"n": n, "k": k}, tuple(specs), (2,) * n, (2,) * n)


def _w_like_operators(strategy, zero_tol: float = 1e-10):
    n = len(strategy.measurements)
    zs = [_obs_matrix(strategy, p, 0) for p in range(n - 1)]
    xs = [_obs_matrix(strategy, p, 1) for p in range(n - 1)]
    z, x = extract_zx(_obs_matrix(strategy, n - 1, 0), _obs_matrix(strategy, n - 1, 1), np.pi / 4, zero_tol)
    return zs + [z], xs + [x]


def w_operator_identities(strategy, tol: float = DEFAULT_TOL) -> CheckReport:
    """Identities on the projected states ``sqrt(N/2) ⊗_{l != i} Z_l^+ psi``.

    Checks ``(Z_i - Z_N)``, ``X_i(1 + Z_N) - X_N(1 - Z_i)`` and ``{Z_i, X_i}``
    annihilate them, that ``X_i X_N`` leaves them invariant, and that
    ``Z_i^- Z_j^- psi = 0``.
    """
    n = len(strategy.measurements)
    last = n - 1
    zs, xs = _w_like_operators(strategy)
    psi = strategy.state.tensor()
    d = strategy.state.dims
    labels, res = [], []
    for i in range(n - 1):
        t = psi
        for l in range(n - 1):
            if l != i:
                t = apply_local((np.eye(d[l]) + zs[l]) / 2, l, t)
        t = np.sqrt(n / 2) * t
        zi_t = apply_local(zs[i], i, t)
        zn_t = apply_local(zs[last], last, t)
        labels.append(f"w.z_agree[{i}]")
        res.append(_norm(zi_t - zn_t))
        lhs = apply_local(xs[i], i, t + zn_t) - apply_local(xs[last], last, t - zi_t)
        labels.append(f"w.x_relation[{i}]")
        res.append(_norm(lhs))
        anti = apply_local(xs[i], i, zi_t) + apply_local(zs[i], i, apply_local(xs[i], i, t))
        labels.append(f"w.anticommute[{i}]")
        res.append(_norm(anti))
        xx = apply_local(xs[last], last, apply_local(xs[i], i, t))
        labels.append(f"w.xx_stabilizer[{i}]")
        res.append(_norm(xx - t))
    for i, j in itertools.combinations(range(n - 1), 2):
        t = apply_local((np.eye(d[i]) - zs[i]) / 2, i, psi)
        t = apply_local((np.eye(d[j]) - zs[j]) / 2, j, t)
        labels.append(f"w.double_excitation[{i},{j}]")
        res.append(_norm(t))
    return CheckReport(tuple(labels), np.array(res), tol)


# ---------------------------------------------------------------------------
# Graph states


def graph_conditions(g: Graph) -> ConditionSet:
    """Conditions for a graph state whose last two vertices are adjacent.

    Z_N and X_N of the last party are ``(D + E)/sqrt2`` and ``(D - E)/sqrt2``.
    The Bell operator for the pair (N-1, N) is
    ``(-1)^{m_{N-1}} X_{N-1}(D + E) + (-1)^{m_N} Z_{N-1}(D - E)``
    where ``m_v`` counts outcomes 1 among the neighbours of ``v`` other than
    its partner.
    """
    n = g.n_vertices
    if n < 2:
        raise ValueError("graph conditions need at least two vertices")
    last, partner = n - 1, n - 2
    if (partner, last) not in g.edges:
        raise ValueError("vertices N-2 and N-1 (0-based) must be adjacent; relabel with selftest_labeling")

    def z(p):
        return _last_z() if p == last else obs(0)

    def x(p):
        return _last_x() if p == last else obs(1)

    specs: list[CorrelatorSpec] = []
    nu = sorted(pair_neighbors(g, partner, last))
    nb_partner = neighbors(g, partner) - {last}
    nb_last = neighbors(g, last) - {partner}
    weight_nu = 1.0 / 2 ** len(nu)
    for tau in itertools.product((0, 1), repeat=len(nu)):
        t = dict(zip(nu, tau))
        cond = {p: _z_proj(p, last, b) for p, b in t.items()}
        tag = _bits(tau)
        s = _spec(f"graph.marginal[{partner},{last}][tau={tag}]", [(1.0, cond)], weight_nu)
        if s is not None:
            specs.append(s)
        m_partner = sum(t[v] for v in nb_partner)
        m_last = sum(t[v] for v in nb_last)
        sp, sl = (-1.0) ** m_partner, (-1.0) ** m_last
        terms = [
            (sp, {**cond, partner: obs(1), last: obs(0)}),
            (sp, {**cond, partner: obs(1), last: obs(1)}),
            (sl, {**cond, partner: obs(0), last: obs(0)}),
            (-sl, {**cond, partner: obs(0), last: obs(1)}),
        ]
        specs.append(CorrelatorSpec.combination(
            f"graph.projected_bell[{partner},{last}][tau={tag}]", terms, 2 * np.sqrt(2) * weight_nu))
    for a, b in g.sorted_edges():
        if (a, b) == (partner, last):
            continue
        nu = sorted(pair_neighbors(g, a, b))
        weight = 1.0 / 2 ** len(nu)
        for i, j in ((a, b), (b, a)):
            nb_j = neighbors(g, j) - {i}
            for tau in itertools.product((0, 1), repeat=len(nu)):
                t = dict(zip(nu, tau))
                cond = {p: _z_proj(p, last, bit) for p, bit in t.items()}
                tag = _bits(tau)
                if i == a:
                    s = _spec(f"graph.marginal[{a},{b}][tau={tag}]", [(1.0, cond)], weight)
                    if s is not None:
                        specs.append(s)
                m_j = sum(t[v] for v in nb_j)
                specs.append(CorrelatorSpec.product(
                    f"graph.zx[{i},{j}][tau={tag}]", {**cond, i: z(i), j: x(j)}, (-1) ** m_j * weight))
    return ConditionSet("graph", {"graph": g.to_json()}, tuple(specs), (2,) * n, (2,) * n)


def graph_anticommutation_check(strategy, g: Graph | None = None, tol: float = DEFAULT_TOL) -> CheckReport:
    """``‖{X_i, Z_i} psi‖`` for every party, the last one through its regularized pair."""
    n = len(strategy.measurements)
    if g is not None and g.n_vertices != n:
        raise ValueError(f"graph has {g.n_vertices} vertices, strategy has {n} parties")
    zs, xs = _w_like_operators(strategy)
    psi = strategy.state.tensor()
    labels, res = [], []
    for p in range(n):
        v = apply_local(xs[p], p, apply_local(zs[p], p, psi)) + apply_local(zs[p], p, apply_local(xs[p], p, psi))
        labels.append(f"graph.anticommute[{p}]")
        res.append(_norm(v))
    return CheckReport(tuple(labels), np.array(res), tol)


# ---------------------------------------------------------------------------
# Schmidt states


def schmidt_conditions(c: Sequence[float], n: int) -> ConditionSet:
    """One projector-product spec per table entry of the block-structured questions."""
    c = validate_schmidt(c)
    from .correlations import expected_schmidt_table

    d = c.size
    plain, shifted = schmidt_questions(n)
    specs = []
    for q in plain + shifted:
        expected, _ = expected_schmidt_table(c, n, q)
        qs = _bits(q)
        for a in itertools.product(range(d), repeat=n):
            specs.append(CorrelatorSpec.product(
                f"schmidt.entry[x={qs}][a={_bits(a)}]",
                {p: proj(x, ap) for p, (x, ap) in enumerate(zip(q, a))}, float(expected[a])))
    return ConditionSet("schmidt", {"coeffs": c.tolist(), "n": n}, tuple(specs),
                        (3,) * (n - 1) + (4,), (d,) * n)


def schmidt_tables(strategy, n: int):
    plain, shifted = schmidt_questions(n)
    return {q: probability_table(strategy, q) for q in plain + shifted}


def schmidt_condition_check(strategy, c: Sequence[float], tol: float = DEFAULT_TOL) -> CheckReport:
    c = validate_schmidt(c)
    n = len(strategy.measurements)
    _check_arity(strategy, (3,) * (n - 1) + (4,), (c.size,) * n, "schmidt")
    return block_structure_check(schmidt_tables(strategy, n), c, tol)


# ---------------------------------------------------------------------------
# Evaluation


def _check_arity(strategy, n_settings: Sequence[int], n_outcomes: Sequence[int], family: str) -> None:
    meas = strategy.measurements
    if n_settings and len(meas) != len(n_settings):
        raise ValueError(f"arity mismatch: {family} conditions expect {len(n_settings)} parties, "
                         f"strategy has {len(meas)}")
    for p, need in enumerate(n_settings):
        if len(meas[p]) < need:
            raise ValueError(f"arity mismatch: party {p} needs {need} settings, has {len(meas[p])}")
    for p, k in enumerate(n_outcomes):
        for x in range(n_settings[p] if n_settings else len(meas[p])):
            if meas[p][x].n_outcomes != k:
                raise ValueError(f"arity mismatch: party {p} setting {x} has {meas[p][x].n_outcomes} "
                                 f"outcomes, {family} conditions expect {k}")


def _table_entry(spec: CorrelatorSpec, n: int):
    """(question, outcomes) when ``spec`` is a single full projector product, else None."""
    if len(spec.terms) != 1:
        return None
    coeff, factors = spec.terms[0]
    if coeff != 1.0 or len(factors) != n:
        return None
    q, a = [], []
    for _, f in factors:
        if len(f.atoms) != 1:
            return None
        c, kind, x, out = f.atoms[0]
        if kind != "proj" or c != 1.0:
            return None
        q.append(x)
        a.append(out)
    return tuple(q), tuple(a)


def thread_cap() -> int:
    raw = os.environ.get("SELFTEST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"SELFTEST_THREADS must be a positive integer, got {raw!r}") from None


def evaluate_conditions(strategy, conditions: ConditionSet) -> np.ndarray:
    n = len(strategy.measurements)
    _check_arity(strategy, conditions.n_settings, conditions.n_outcomes, conditions.family)
    for s in conditions.specs:
        bad = [p for p in s.parties() if not 0 <= p < n]
        if bad:
            raise ValueError(f"arity mismatch: {s.label} references parties {bad}")

    tables: dict = {}
    ev = _Evaluator(strategy)

    def one(spec: CorrelatorSpec) -> float:
        entry = _table_entry(spec, n)
        if entry is None:
            return ev.spec(spec)
        q, a = entry
        if q not in tables:
            tables[q] = probability_table(strategy, q).probs
        return float(tables[q][a])

    workers = thread_cap()
    if workers == 1 or len(conditions.specs) < 2:
        return np.array([one(s) for s in conditions.specs], dtype=float)
    # table-backed specs share the cache; fill it first so threads only read
    for s in conditions.specs:
        entry = _table_entry(s, n)
        if entry is not None and entry[0] not in tables:
            tables[entry[0]] = probability_table(strategy, entry[0]).probs
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(one, conditions.specs)), dtype=float)


def check(strategy, conditions: ConditionSet, tol: float = DEFAULT_TOL) -> CheckReport:
    """Residual ``|measured - target|`` for every spec."""
    if not conditions.specs:
        return CheckReport((), np.zeros(0), tol)
    measured = evaluate_conditions(strategy, conditions)
    targets = np.array([s.target for s in conditions.specs], dtype=float)
    return CheckReport(tuple(conditions.labels()), np.abs(measured - targets), tol,
                       measured=measured, targets=targets)


def family_conditions(family: str, params: Mapping) -> ConditionSet:
    if family == "tilted_chsh":
        return tilted_chsh_conditions(params["theta"])
    if family == "ghz":
        return ghz_conditions(int(params["n"]), params["theta"])
    if family == "schmidt":
        return schmidt_conditions(params["coeffs"], int(params["n"]))
    if family == "w":
        return w_conditions(int(params["n"]))
    if family == "dicke":
        return dicke_conditions(int(params["n"]), int(params["k"]))
    if family == "graph":
        g = params["graph"]
        return graph_conditions(g if isinstance(g, Graph) else Graph.from_json(g))
    raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")

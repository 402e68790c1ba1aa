"""Strategy data model: ideal assembly, adversarial embeddings, noise and JSON files."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

from .observables import (
    PVM,
    ideal_ghz_measurements,
    ideal_graph_measurements,
    ideal_schmidt_measurements,
    ideal_w_measurements,
    validate_party,
)
from .states import (
    Graph,
    ghz_state,
    graph_state,
    schmidt_state,
    validate_schmidt,
    x_dicke_state,
    x_w_state,
)
from .tensor import StateVector, apply_local, is_unitary

MAX_TOTAL_DIM = 4096


@dataclass(frozen=True)
class Strategy:
    """Joint state plus one tuple of PVMs per party.

    ``white_noise = eps`` switches evaluation to the mixed state
    ``(1 - eps)|psi><psi| + eps 1/D``.
    """

    state: StateVector
    measurements: tuple
    white_noise: float = 0.0
    family: str | None = None
    params: dict | None = None

    def __post_init__(self):
        meas = tuple(tuple(settings) for settings in self.measurements)
        if len(meas) != self.state.n_parties:
            raise ValueError(f"{len(meas)} measurement lists for {self.state.n_parties} parties")
        for p, settings in enumerate(meas):
            if not settings:
                raise ValueError(f"party {p} has no settings")
            validate_party(settings)
            if settings[0].dim != self.state.dims[p]:
                raise ValueError(f"party {p}: measurements act on dimension {settings[0].dim}, "
                                 f"state has {self.state.dims[p]}")
        eps = float(self.white_noise)
        if not 0 <= eps <= 1:
            raise ValueError(f"white noise {eps} outside [0, 1]")
        object.__setattr__(self, "measurements", meas)
        object.__setattr__(self, "white_noise", eps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims

    @property
    def n_parties(self) -> int:
        return self.state.n_parties


# ---------------------------------------------------------------------------
# Families


def normalize_params(family: str, params: Mapping[str, Any]) -> dict:
    """Canonical JSON-friendly parameters; raises ValueError on missing or invalid entries."""
    try:
        if family == "tilted_chsh":
            return {"theta": float(params["theta"])}
        if family == "ghz":
            return {"n": int(params["n"]), "theta": float(params["theta"])}
        if family == "schmidt":
            return {"coeffs": [float(v) for v in validate_schmidt(params["coeffs"])], "n": int(params["n"])}
        if family == "w":
            return {"n": int(params["n"])}
        if family == "dicke":
            return {"n": int(params["n"]), "k": int(params["k"])}
        if family == "graph":
            g = params["graph"]
            g = g if isinstance(g, Graph) else Graph.from_json(g)
            return {"graph": g.to_json()}
    except KeyError as exc:
        raise ValueError(f"family {family!r} needs parameter {exc.args[0]!r}") from None
    raise ValueError(f"unknown family {family!r}")


def ideal_measurements(family: str, params: Mapping[str, Any]) -> list[tuple[PVM, ...]]:
    p = normalize_params(family, params)
    if family == "tilted_chsh":
        return ideal_ghz_measurements(2, p["theta"])
    if family == "ghz":
        return ideal_ghz_measurements(p["n"], p["theta"])
    if family == "schmidt":
        return ideal_schmidt_measurements(p["coeffs"], p["n"])
    if family in ("w", "dicke"):
        return ideal_w_measurements(p["n"])
    return ideal_graph_measurements(Graph.from_json(p["graph"]))


def target_state(family: str, params: Mapping[str, Any]) -> StateVector:
    p = normalize_params(family, params)
    if family == "tilted_chsh":
        return ghz_state(2, p["theta"])
    if family == "ghz":
        return ghz_state(p["n"], p["theta"])
    if family == "schmidt":
        return schmidt_state(p["coeffs"], p["n"])
    if family == "w":
        return x_w_state(p["n"])
    if family == "dicke":
        return x_dicke_state(p["n"], p["k"])
    return graph_state(Graph.from_json(p["graph"]))


def ideal_strategy(family: str, params: Mapping[str, Any], *, check: bool = True) -> Strategy:
    """Reference state with the family's ideal measurements.

    With ``check`` the result is evaluated against the family's conditions at
    1e-9 and a failure raises, so a returned strategy is known to pass.
    """
    from .conditions import check as run_check, family_conditions

    p = normalize_params(family, params)
    s = Strategy(target_state(family, p), tuple(ideal_measurements(family, p)), family=family, params=p)
    if check:
        report = run_check(s, family_conditions(family, p), 1e-9)
        if not report.passed:
            raise AssertionError(f"ideal {family} strategy fails its conditions: {report.failing()[:5]}")
    return s


# ---------------------------------------------------------------------------
# Adversarial embedding and noise


@dataclass(frozen=True)
class AdversarialTransform:
    """Per-party junk dimensions, seeded local unitaries and an optional junk state.

    Without ``junk_state`` a random (generally entangled) junk vector is drawn
    from the seed. ``rotate=False`` skips the local unitaries.
    """

    junk_dims: tuple[int, ...]
    seed: int | None = 0
    junk_state: np.ndarray | None = None
    rotate: bool = True

    def __post_init__(self):
        dims = tuple(int(j) for j in self.junk_dims)
        if any(j < 1 for j in dims):
            raise ValueError(f"junk dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "junk_dims", dims)


def _random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(dim, random_state=rng)


def adversarial_embed(s: Strategy, t: AdversarialTransform) -> Strategy:
    """Tensor a junk factor onto every party and rotate each local space.

    Party p's new space is ``system_p ⊗ junk_p``. The state becomes
    ``(⊗_p U_p) (psi ⊗ junk)`` with registers interleaved per party and every
    projector becomes ``U_p (P ⊗ 1) U_p^†``. Correlations are unchanged.
    """
    n = s.n_parties
    if len(t.junk_dims) == 1 and n > 1:
        t = dataclasses.replace(t, junk_dims=t.junk_dims * n)
    if len(t.junk_dims) != n:
        raise ValueError(f"{len(t.junk_dims)} junk dimensions for {n} parties")
    new_dims = tuple(d * j for d, j in zip(s.dims, t.junk_dims))
    total = int(np.prod(new_dims))
    if total > MAX_TOTAL_DIM:
        raise ValueError(f"embedded dimension {total} exceeds the limit of {MAX_TOTAL_DIM}")
    rng = np.random.default_rng(t.seed)
    d_junk = int(np.prod(t.junk_dims))
    if t.junk_state is None:
        junk = rng.normal(size=d_junk) + 1j * rng.normal(size=d_junk)
    else:
        junk = np.asarray(t.junk_state, dtype=complex).reshape(-1)
        if junk.size != d_junk:
            raise ValueError(f"junk state has length {junk.size}, expected {d_junk}")
    junk = junk / np.linalg.norm(junk)
    unitaries = [_random_unitary(dd, rng) if t.rotate else np.eye(dd, dtype=complex) for dd in new_dims]
    for u in unitaries:
        if not is_unitary(u):
            raise ValueError("local unitary failed the unitarity check")
    joint = np.multiply.outer(s.state.tensor(), junk.reshape(t.junk_dims))
    order = [ax for p in range(n) for ax in (p, n + p)]
    joint = np.transpose(joint, order).reshape(new_dims)
    for p, u in enumerate(unitaries):
        joint = apply_local(u, p, joint)
    state = StateVector(new_dims, joint.reshape(-1) / np.linalg.norm(joint))
    meas = []
    for p, settings in enumerate(s.measurements):
        u = unitaries[p]
        eye = np.eye(t.junk_dims[p])
        new_settings = []
        for pvm in settings:
            stack = np.stack([u @ np.kron(proj, eye) @ u.conj().T for proj in pvm.projectors])
            new_settings.append(PVM(stack))
        meas.append(tuple(new_settings))
    return Strategy(state, tuple(meas), s.white_noise, s.family, s.params)


def noise_mix(s: Strategy, epsilon: float) -> Strategy:
    """Same strategy evaluated on ``(1 - eps)|psi><psi| + eps 1/D`` (noise composes)."""
    eps = float(epsilon)
    if not 0 <= eps <= 1:
        raise ValueError(f"epsilon={eps} outside [0, 1]")
    combined = 1 - (1 - s.white_noise) * (1 - eps)
    return dataclasses.replace(s, white_noise=combined)


# ---------------------------------------------------------------------------
# Serialization


class StrategyFormatError(ValueError):
    """Malformed strategy file; the message names the offending field or line."""


def _matrix_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def serialize(s: Strategy) -> bytes:
    data: dict[str, Any] = {
        "dims": list(s.dims),
        "state": {"re": s.state.amplitudes.real.tolist(), "im": s.state.amplitudes.imag.tolist()},
        "parties": [
            {"settings": [{"projectors": [_matrix_json(p) for p in pvm.projectors]} for pvm in settings]}
            for settings in s.measurements
        ],
    }
    if s.family is not None:
        data["family"] = {"name": s.family, "params": s.params or {}}
    if s.white_noise:
        data["white_noise"] = s.white_noise
    return json.dumps(data).encode()


def _get(obj, key, path: str):
    if not isinstance(obj, dict):
        raise StrategyFormatError(f"{path or 'top level'}: expected an object")
    if key not in obj:
        raise StrategyFormatError(f"missing field '{path + '.' if path else ''}{key}'")
    return obj[key]


def _array(obj, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise StrategyFormatError(f"{path}: not a rectangular array of numbers") from None
    if arr.ndim != ndim:
        raise StrategyFormatError(f"{path}: expected a {ndim}-dimensional array, got shape {arr.shape}")
    return arr


def _complex(obj, path: str, ndim: int) -> np.ndarray:
    re = _array(_get(obj, "re", path), f"{path}.re", ndim)
    im = _array(_get(obj, "im", path), f"{path}.im", ndim)
    if re.shape != im.shape:
        raise StrategyFormatError(f"{path}: re and im shapes differ ({re.shape} vs {im.shape})")
    return re + 1j * im


def deserialize(data: bytes | str) -> Strategy:
    if isinstance(data, bytes):
        try:
            data = data.decode()
        except UnicodeDecodeError as exc:
            raise StrategyFormatError(f"file is not UTF-8 text: {exc}") from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise StrategyFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    dims = [int(d) for d in _array(_get(obj, "dims", ""), "dims", 1)]
    amps = _complex(_get(obj, "state", ""), "state", 1)
    parties = _get(obj, "parties", "")
    if not isinstance(parties, list):
        raise StrategyFormatError("parties: expected a list")
    meas = []
    for p, party in enumerate(parties):
        settings = _get(party, "settings", f"parties[{p}]")
        if not isinstance(settings, list):
            raise StrategyFormatError(f"parties[{p}].settings: expected a list")
        pvms = []
        for x, setting in enumerate(settings):
            path = f"parties[{p}].settings[{x}]"
            projs = _get(setting, "projectors", path)
            if not isinstance(projs, list) or not projs:
                raise StrategyFormatError(f"{path}.projectors: expected a non-empty list")
            mats = [_complex(m, f"{path}.projectors[{a}]", 2) for a, m in enumerate(projs)]
            shapes = {m.shape for m in mats}
            if len(shapes) != 1:
                raise StrategyFormatError(f"{path}.projectors: matrices of different shapes {sorted(shapes)}")
            try:
                pvms.append(PVM(np.stack(mats)))
            except ValueError as exc:
                raise StrategyFormatError(f"{path}: {exc}") from None
        meas.append(tuple(pvms))
    family = params = None
    if "family" in obj:
        fam = obj["family"]
        family = _get(fam, "name", "family")
        params = _get(fam, "params", "family")
        try:
            params = normalize_params(family, params)
        except ValueError as exc:
            raise StrategyFormatError(f"family: {exc}") from None
    noise = obj.get("white_noise", 0.0)
    try:
        state = StateVector(tuple(dims), amps)
        return Strategy(state, tuple(meas), float(noise), family, params)
    except ValueError as exc:
        raise StrategyFormatError(str(exc)) from None


def save(s: Strategy, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(s))


def load(path) -> Strategy:
    with open(path, "rb") as fh:
        return deserialize(fh.read())

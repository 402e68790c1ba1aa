"""Local isometries that map a strategy's state onto ``junk ⊗ target``.

Register order of every isometry output: the original party registers first
(party 0 most significant), then one ancilla per party in party order. The
qubit circuit uses two-dimensional ancillas, the Fourier construction
d-dimensional ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .report import CheckReport
from .states import validate_schmidt
from .tensor import (
    StateVector,
    apply_local,
    fidelity,
    is_hermitian,
    is_unitary,
    reduced_density,
    support_projector,
)
from .observables import extract_zx, mu_from_theta, schmidt_angles

RANK_TOL = 1e-10


def fourier_matrix(d: int) -> np.ndarray:
    """``F|j> = d^{-1/2} sum_k w^{jk} |k>`` with ``w = exp(2 pi i / d)``."""
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def _controlled(t: np.ndarray, party: int, anc_axis: int, ops: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``ops[k]`` to ``party`` on the branch where the ancilla at ``anc_axis`` reads ``k``."""
    t = np.moveaxis(t, anc_axis, 0)
    out = np.stack([apply_local(ops[k], party, t[k]) for k in range(t.shape[0])])
    return np.moveaxis(out, 0, anc_axis)


def _as_tensor(psi, dims: Sequence[int] | None):
    if isinstance(psi, StateVector):
        return psi.tensor(), psi.dims
    if dims is None:
        raise ValueError("dims are required when passing a raw array")
    dims = tuple(int(d) for d in dims)
    arr = np.asarray(psi, dtype=complex)
    total = int(np.prod(dims))
    if arr.shape[0] == total:  # flat vector(s), possibly with trailing batch axes
        arr = arr.reshape(dims + arr.shape[1:])
    return arr, dims


def _fourier_isometry(t: np.ndarray, dims: tuple[int, ...], z_ops, x_chains, d: int,
                      return_stages: bool = False):
    """Append, Fourier, controlled powers of Z, inverse Fourier, controlled X-chain.

    ``t`` has one axis per party followed by optional batch axes. Ancilla axes
    are inserted right after the party axes.
    """
    n = len(dims)
    stages = {}
    anc = np.zeros(d, dtype=complex)
    anc[0] = 1.0
    for l in range(n):
        t = np.expand_dims(t, n + l)
        t = np.tensordot(anc.reshape(d, 1), t, axes=([1], [n + l]))  # (d, ...) with ancilla axis at 0
        t = np.moveaxis(t, 0, n + l)
    stages["append"] = t
    f = fourier_matrix(d)
    for l in range(n):
        t = apply_local(f, n + l, t)
    stages["fourier"] = t
    for l in range(n):
        z = z_ops[l]
        powers = [np.linalg.matrix_power(z, k) for k in range(d)]
        t = _controlled(t, l, n + l, powers)
    stages["phase"] = t
    for l in range(n):
        t = apply_local(f.conj().T, n + l, t)
    stages["inverse_fourier"] = t
    for l in range(n):
        t = _controlled(t, l, n + l, x_chains[l])
    stages["correction"] = t
    if return_stages:
        return t, stages
    return t


def qubit_swap_isometry(zs: Sequence[np.ndarray], xs: Sequence[np.ndarray], psi, dims=None):
    """``sum_tau X^tau Z^(tau) psi ⊗ |tau>`` via H, controlled-Z, H, controlled-X per party.

    ``psi`` is a StateVector (returns a StateVector on ``dims + (2,)*N``) or an
    array with one axis per party plus batch axes (returns the array).
    """
    t, dims = _as_tensor(psi, dims)
    n = len(dims)
    if len(zs) != n or len(xs) != n:
        raise ValueError(f"need one Z and one X per party ({n})")
    for p, (z, x) in enumerate(zip(zs, xs)):
        for name, op in (("Z", z), ("X", x)):
            op = np.asarray(op)
            if op.shape != (dims[p], dims[p]):
                raise ValueError(f"{name} of party {p} has shape {op.shape}, party dimension is {dims[p]}")
            if not (is_hermitian(op, 1e-10) and is_unitary(op)):
                raise ValueError(f"{name} of party {p} is not a Hermitian unitary")
    chains = [[np.eye(dims[p]), np.asarray(xs[p], dtype=complex)] for p in range(n)]
    out = _fourier_isometry(t, dims, [np.asarray(z, dtype=complex) for z in zs], chains, 2)
    if isinstance(psi, StateVector):
        return StateVector(dims + (2,) * n, out.reshape(-1))
    return out


def _check_projector_set(ps: Sequence[np.ndarray], party: int, tol: float = 1e-8) -> None:
    dim = ps[0].shape[0]
    total = sum(ps)
    if np.max(np.abs(total - np.eye(dim))) > tol:
        raise ValueError(f"projectors of party {party} do not sum to the identity")
    for a in range(len(ps)):
        if np.max(np.abs(ps[a] @ ps[a] - ps[a])) > tol:
            raise ValueError(f"operator {a} of party {party} is not a projector")
        for b in range(a + 1, len(ps)):
            if np.max(np.abs(ps[a] @ ps[b])) > tol:
                raise ValueError(f"projectors {a}, {b} of party {party} are not orthogonal")


def last_party_supports(p_last: Sequence[np.ndarray], psi: StateVector, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Projectors onto the support of the last party's reduced state of ``P^(k) psi``.

    They agree with ``P^(k)`` on the relevant vectors and, when the
    self-testing relations hold, are mutually orthogonal, which makes
    ``sum_k w^k Q_k + 1 - sum_k Q_k`` unitary.
    """
    n = psi.n_parties
    qs = []
    for p in p_last:
        v = apply_local(p, n - 1, psi.tensor())
        rho = reduced_density(v, [n - 1], psi.dims)
        qs.append(support_projector(rho, tol))
    for a in range(len(qs)):
        for b in range(a + 1, len(qs)):
            if np.max(np.abs(qs[a] @ qs[b]), initial=0) > 1e-8:
                raise ValueError(f"support projectors {a}, {b} of the last party overlap")
    return qs


def qudit_z(ps: Sequence[np.ndarray], complete: bool = True) -> np.ndarray:
    d = len(ps)
    w = np.exp(2j * np.pi / d)
    dim = ps[0].shape[0]
    z = sum(w**k * p for k, p in enumerate(ps))
    if complete:
        z = z + np.eye(dim) - sum(ps)
    return z


def qudit_isometry(p_sets: Sequence[Sequence[np.ndarray]], x_sets: Sequence[Sequence[np.ndarray]],
                   psi: StateVector, *, return_stages: bool = False, restrict_last: bool = True):
    """Fourier-register isometry with ``Z_l = sum_k w^k P_l^(k)`` and controlled ``X_l^(k)``.

    Parties other than the last need complete orthogonal projector sets. The
    last party's set is replaced by the support projectors of
    :func:`last_party_supports` (with ``restrict_last``) and completed by
    ``1 - sum_k Q_k``.
    """
    n = psi.n_parties
    if len(p_sets) != n or len(x_sets) != n:
        raise ValueError(f"need projector and X sets for all {n} parties")
    d = len(p_sets[0])
    for l in range(n):
        if len(p_sets[l]) != d or len(x_sets[l]) != d:
            raise ValueError(f"party {l}: expected {d} projectors and {d} X operators")
        for x in x_sets[l]:
            if not is_unitary(x, 1e-8):
                raise ValueError(f"X operator of party {l} is not unitary")
    for l in range(n - 1):
        _check_projector_set(p_sets[l], l)
    last = list(p_sets[n - 1])
    if restrict_last:
        last = last_party_supports(last, psi)
    z_ops = [qudit_z(p_sets[l], complete=False) for l in range(n - 1)] + [qudit_z(last, complete=True)]
    out = _fourier_isometry(psi.tensor(), psi.dims, z_ops, x_sets, d, return_stages)
    dims_out = psi.dims + (d,) * n
    if return_stages:
        t, stages = out
        return StateVector(dims_out, t.reshape(-1)), {k: v.reshape(-1) for k, v in stages.items()}
    return StateVector(dims_out, out.reshape(-1))


# ---------------------------------------------------------------------------
# Operator extraction for Schmidt strategies


def _unitarize(pvm, minus: int) -> np.ndarray:
    """Block operator ``P_plus - P_minus`` padded with the identity: ``1 - 2 P_minus``."""
    return np.eye(pvm.dim) - 2 * pvm.projectors[minus]


@dataclass
class SchmidtOperators:
    p_sets: list
    x_sets: list
    z_blocks: dict = field(default_factory=dict)


def extract_schmidt_operators(strategy, c: Sequence[float], zero_tol: float = 1e-10) -> SchmidtOperators:
    """Projector sets ``P_l^(k)`` and X-chains ``X_l^(k)`` from a Schmidt strategy.

    Parties before the last: ``P^(k)`` is outcome k of setting 0; the block
    operators of settings 1 and 2 are unitarized and give ``X_m`` and ``Y_m``.
    Last party: for each block the unitarized operators of settings (0, 1)
    (or (2, 3) for shifted blocks) pass through the regularized Z/X
    extraction at angle ``arctan sin 2 theta_m``. ``P^(2m)`` and ``P^(2m+1)``
    are ``(1_C ± 1_C Z 1_C)/2`` on the support C of the two settings' block
    projectors. Chains are ``X^(0) = 1``, ``X^(2m) = X_0 Y_0 ... X_{m-1} Y_{m-1}``
    and ``X^(2m+1) = X^(2m) X_m``.
    """
    c = validate_schmidt(c)
    d = c.size
    n = len(strategy.measurements)
    thetas, primes = schmidt_angles(c)
    n_blocks = d // 2
    n_shift = len(primes)
    p_sets, x_sets = [], []
    z_blocks = {}
    for l in range(n):
        meas = strategy.measurements[l]
        dim = meas[0].dim
        xs, ys = [], []
        if l < n - 1:
            ps = [meas[0].projectors[k] for k in range(d)]
            for m in range(n_blocks):
                xs.append(_unitarize(meas[1], 2 * m + 1))
            for m in range(n_shift):
                ys.append(_unitarize(meas[2], (2 * m + 2) % d))
        else:
            ps = [None] * d
            for m in range(n_blocks):
                b0 = _unitarize(meas[0], 2 * m + 1)
                b1 = _unitarize(meas[1], 2 * m + 1)
                z, x = extract_zx(b0, b1, mu_from_theta(thetas[m]), zero_tol)
                block = sum(meas[s].projectors[k] for s in (0, 1) for k in (2 * m, 2 * m + 1))
                one_c = support_projector(block, RANK_TOL)
                czc = one_c @ z @ one_c
                ps[2 * m] = (one_c + czc) / 2
                ps[2 * m + 1] = (one_c - czc) / 2
                xs.append(x)
                z_blocks[m] = z
            if d % 2 == 1:
                ps[d - 1] = np.array(meas[0].projectors[d - 1])
            for m in range(n_shift):
                j = (2 * m + 2) % d
                b0 = _unitarize(meas[2], j)
                b1 = _unitarize(meas[3], j)
                _, y = extract_zx(b0, b1, mu_from_theta(primes[m]), zero_tol)
                ys.append(y)
        chains = []
        for k in range(d):
            op = np.eye(dim, dtype=complex)
            for m in range(k // 2):
                op = op @ xs[m] @ ys[m]
            if k % 2 == 1:
                op = op @ xs[k // 2]
            chains.append(op)
        p_sets.append(ps)
        x_sets.append(chains)
    return SchmidtOperators(p_sets, x_sets, z_blocks)


def schmidt_chain_check(strategy, ops: SchmidtOperators, c: Sequence[float], tol: float = 1e-8) -> CheckReport:
    """``P_l^(k) psi = P_1^(k) psi`` for all l, and ``X_1^(k)...X_N^(k) P_1^(k) psi = (c_k/c_0) P_1^(0) psi``."""
    c = validate_schmidt(c)
    psi = strategy.state.tensor()
    n = len(ops.p_sets)
    labels, res = [], []
    ref0 = apply_local(ops.p_sets[0][0], 0, psi)
    for k in range(c.size):
        ref = apply_local(ops.p_sets[0][k], 0, psi)
        for l in range(1, n):
            labels.append(f"schmidt.projector_agree[k={k}][{l}]")
            res.append(float(np.linalg.norm(apply_local(ops.p_sets[l][k], l, psi) - ref)))
        v = ref
        for l in range(n):
            v = apply_local(ops.x_sets[l][k], l, v)
        labels.append(f"schmidt.chain[k={k}]")
        res.append(float(np.linalg.norm(v - (c[k] / c[0]) * ref0)))
    return CheckReport(tuple(labels), np.array(res), tol)


# ---------------------------------------------------------------------------
# Factorization


@dataclass(frozen=True)
class FactorizationReport:
    target_fidelity: float
    junk_state: StateVector | None
    residual_norm: float
    junk_dims: tuple[int, ...]
    notes: dict = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return self.target_fidelity >= 1 - tol


def _split(vector: np.ndarray, dims: Sequence[int], target_registers: Sequence[int]):
    dims = tuple(dims)
    target_registers = list(target_registers)
    rest = [p for p in range(len(dims)) if p not in target_registers]
    t = np.asarray(vector, dtype=complex).reshape(dims + vector.shape[1:] if vector.ndim > 1 else dims)
    batch = list(range(len(dims), t.ndim))
    t = np.transpose(t, rest + target_registers + batch)
    d_rest = int(np.prod([dims[p] for p in rest]))
    d_tar = int(np.prod([dims[p] for p in target_registers]))
    return t.reshape((d_rest, d_tar) + t.shape[len(dims):]), [dims[p] for p in rest]


def factorization_check(output: StateVector, target: StateVector, target_registers: Sequence[int]) -> FactorizationReport:
    """Fidelity of the target registers with ``target`` and the best product approximation.

    The junk vector is ``(1 ⊗ <target|) output``, normalized. The residual is
    ``‖output - junk ⊗ target‖`` with the target registers moved last.
    """
    target_registers = [int(r) for r in target_registers]
    if len(set(target_registers)) != len(target_registers):
        raise ValueError("target registers repeat")
    if any(not 0 <= r < output.n_parties for r in target_registers):
        raise ValueError(f"target registers {target_registers} outside 0..{output.n_parties - 1}")
    if tuple(output.dims[r] for r in target_registers) != target.dims:
        raise ValueError(f"target dims {target.dims} do not match registers {target_registers}")
    m, junk_dims = _split(output.amplitudes, output.dims, target_registers)
    rho = reduced_density(output.amplitudes, target_registers, output.dims)
    # reduced_density orders kept registers ascending; reorder the target to match
    order = np.argsort(target_registers)
    tgt = target.tensor()
    tgt_sorted = np.transpose(tgt, order).reshape(-1)
    fid = fidelity(rho, tgt_sorted)
    v = m @ np.conj(target.amplitudes)
    norm = float(np.linalg.norm(v))
    if norm < 1e-14:
        return FactorizationReport(fid, None, float(np.linalg.norm(m)), tuple(junk_dims),
                                   {"degenerate": "target has zero overlap with the output"})
    junk = v / norm
    residual = float(np.linalg.norm(m - np.outer(junk, target.amplitudes)))
    junk_state = StateVector(tuple(junk_dims) if junk_dims else (1,), junk)
    return FactorizationReport(fid, junk_state, residual, tuple(junk_dims))


def target_fidelity_batch(outputs: np.ndarray, out_dims: Sequence[int], target: StateVector,
                          target_registers: Sequence[int]) -> np.ndarray:
    """``‖(1 ⊗ <target|) out_b‖^2`` for a batch of outputs stacked on the last axis."""
    m, _ = _split(outputs.reshape(int(np.prod(out_dims)), -1), out_dims, target_registers)
    v = np.einsum("rtb,t->rb", m, np.conj(target.amplitudes))
    return np.sum(np.abs(v) ** 2, axis=0)


# ---------------------------------------------------------------------------
# Family dispatch


@dataclass
class IsometryRun:
    kind: str
    output: StateVector
    target: StateVector
    target_registers: list
    factorization: FactorizationReport
    apply: object  # callable mapping a batch tensor to isometry outputs
    extras: dict = field(default_factory=dict)


def qubit_operators(strategy, family: str, params: dict):
    from .conditions import _w_like_operators, ghz_local_operators

    if family in ("ghz", "tilted_chsh"):
        return ghz_local_operators(strategy, params["theta"])
    if family in ("w", "dicke", "graph"):
        return _w_like_operators(strategy)
    raise ValueError(f"family {family!r} does not use the qubit circuit")


def run_isometry(strategy, family: str, params: dict) -> IsometryRun:
    from .strategies import target_state

    target = target_state(family, params)
    n = len(strategy.measurements)
    psi = strategy.state
    registers = list(range(n, 2 * n))
    if family == "schmidt":
        c = validate_schmidt(params["coeffs"])
        ops = extract_schmidt_operators(strategy, c)
        last = last_party_supports(ops.p_sets[-1], psi)
        z_ops = [qudit_z(ops.p_sets[l], complete=False) for l in range(n - 1)] + [qudit_z(last)]
        d = c.size

        def apply(t):
            return _fourier_isometry(t, psi.dims, z_ops, ops.x_sets, d)

        out = qudit_isometry(ops.p_sets, ops.x_sets, psi)
        kind = "qudit"
        extras = {"operators": ops}
    else:
        zs, xs = qubit_operators(strategy, family, params)
        chains = [[np.eye(psi.dims[p]), xs[p]] for p in range(n)]

        def apply(t):
            return _fourier_isometry(t, psi.dims, zs, chains, 2)

        out = qubit_swap_isometry(zs, xs, psi)
        kind = "qubit"
        extras = {"z": zs, "x": xs}
    fact = factorization_check(out, target, registers)
    return IsometryRun(kind, out, target, registers, fact, apply, extras)


def mixed_isometry_fidelity(strategy, run: IsometryRun, max_entries: int = 50_000_000) -> float | None:
    """Target fidelity for ``(1 - eps)|psi><psi| + eps 1/D``; None when the batch would be too large."""
    eps = float(strategy.white_noise)
    if eps == 0:
        return run.factorization.target_fidelity
    dims = strategy.state.dims
    total = int(np.prod(dims))
    out_dims = run.output.dims
    if total * int(np.prod(out_dims)) > max_entries:
        return None
    basis = np.eye(total, dtype=complex).reshape(dims + (total,))
    outs = run.apply(basis)
    per_basis = target_fidelity_batch(outs, out_dims, run.target, run.target_registers)
    return float((1 - eps) * run.factorization.target_fidelity + eps * per_basis.sum() / total)


def measurement_selftest_check(strategy, family: str, params: dict, run: IsometryRun | None = None,
                               tol: float = 1e-8) -> CheckReport:
    """``‖Φ(M psi) - junk ⊗ M_ideal target‖`` for every party and setting.

    Binary families use the ±1 observables; Schmidt strategies use every
    outcome projector. The identity operator is included as the state
    factorization residual.
    """
    from .strategies import ideal_measurements

    if run is None:
        run = run_isometry(strategy, family, params)
    if run.factorization.junk_state is None:
        raise ValueError("isometry output has no overlap with the target state")
    junk = run.factorization.junk_state.amplitudes
    ideal = ideal_measurements(family, params)
    n = len(strategy.measurements)
    psi = strategy.state.tensor()
    target = run.target.tensor()
    ops_real, ops_ideal, labels = [], [], []
    for p in range(n):
        for x, pvm in enumerate(strategy.measurements[p]):
            ideal_pvm = ideal[p][x]
            if family == "schmidt":
                for a in range(pvm.n_outcomes):
                    ops_real.append((p, pvm.projectors[a]))
                    ops_ideal.append((p, ideal_pvm.projectors[a]))
                    labels.append(f"{family}.measurement[{p}][x={x}][a={a}]")
            else:
                ops_real.append((p, pvm.observable()))
                ops_ideal.append((p, ideal_pvm.observable()))
                labels.append(f"{family}.measurement[{p}][x={x}]")
    batch = np.stack([apply_local(m, p, psi) for p, m in ops_real], axis=-1)
    outs = run.apply(batch)
    out_dims = run.output.dims
    flat = outs.reshape(int(np.prod(out_dims)), -1)
    res = [_product_residual(run, run.output.amplitudes, junk, target.reshape(-1))]
    labels = [f"{family}.measurement.identity"] + labels
    for b, (p, m_ideal) in enumerate(ops_ideal):
        expected_target = apply_local(m_ideal, p, target).reshape(-1)
        res.append(_product_residual(run, flat[:, b], junk, expected_target))
    return CheckReport(tuple(labels), np.array(res), tol)


def _product_residual(run: IsometryRun, out_vec: np.ndarray, junk: np.ndarray, target_vec: np.ndarray) -> float:
    m, _ = _split(out_vec, run.output.dims, run.target_registers)
    return float(np.linalg.norm(m - np.outer(junk, target_vec)))

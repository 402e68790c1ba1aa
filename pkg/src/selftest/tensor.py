"""Dense linear algebra over small multipartite Hilbert spaces.

Index convention: party 0 is the most significant index of a flattened
amplitude vector, so a state on ``dims = (d0, d1, ...)`` reshapes to an array
of shape ``dims`` with C ordering. Every local action in the package goes
through :func:`apply_local` or :func:`embed_local` so that this convention
lives in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitude vector over ``prod(dims)`` basis kets."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid dimension list {self.dims!r}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {int(np.prod(dims))}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, dims: Sequence[int], amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(tuple(dims), amps / norm)

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def overlap(self, other: "StateVector") -> complex:
        """Return <self|other>."""
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equal_up_to_phase(self, other: "StateVector", tol: float = 1e-12) -> bool:
        return abs(abs(self.overlap(other)) - 1) <= tol


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0) <= tol


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0) <= tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` as the most significant factor."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(factors: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = kron(out, f)
    return out


def embed_local(op: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    """Full-space matrix of ``op`` acting on ``party`` and identity elsewhere."""
    dims = tuple(int(d) for d in dims)
    op = np.asarray(op, dtype=complex)
    if not 0 <= party < len(dims):
        raise ValueError(f"party {party} out of range for {len(dims)} parties")
    if op.shape != (dims[party], dims[party]):
        raise ValueError(
            f"operator of shape {op.shape} does not act on a space of dimension {dims[party]}"
        )
    left = int(np.prod(dims[:party]))
    right = int(np.prod(dims[party + 1:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def apply_local(op: np.ndarray, party: int, tensor: np.ndarray) -> np.ndarray:
    """Apply a single-party operator to axis ``party`` of a state tensor.

    ``tensor`` has one axis per party, optionally followed by extra axes (for
    instance a batch of column vectors); those are left untouched.
    """
    out = np.tensordot(op, tensor, axes=([1], [party]))
    return np.moveaxis(out, 0, party)


def apply_product(ops: dict[int, np.ndarray], vector: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Apply ``⊗_p ops[p]`` (identity on missing parties) to a flat vector."""
    t = np.asarray(vector, dtype=complex).reshape(tuple(dims))
    for party, op in ops.items():
        t = apply_local(op, party, t)
    return t.reshape(-1)


def projectors_from_binary(w: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Return ``((I + W)/2, (I - W)/2)`` for a Hermitian ±1 observable."""
    w = np.asarray(w, dtype=complex)
    if not is_hermitian(w, tol):
        raise ValueError("binary observable must be Hermitian")
    evals = np.linalg.eigvalsh(w)
    if np.max(np.abs(np.abs(evals) - 1), initial=0) > tol:
        raise ValueError(f"spectrum {evals} is not contained in {{-1, +1}}")
    eye = np.eye(w.shape[0])
    return (eye + w) / 2, (eye - w) / 2


def regularized_polar(m: np.ndarray, zero_tol: float = 1e-10) -> np.ndarray:
    """Sign operator of a Hermitian matrix, with null directions sent to +1.

    For Hermitian ``M`` the unitary part ``M|M|^{-1}`` of the polar
    decomposition is ``sum sign(lambda) |v><v|``. Eigenvalues with
    ``|lambda| < zero_tol`` are replaced by one first, which makes the result
    a Hermitian unitary even when ``M`` is singular.
    """
    m = np.asarray(m, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m), initial=0)))
    if not is_hermitian(m, 1e-10 * scale):
        raise ValueError("regularized_polar expects a Hermitian matrix")
    m = (m + m.conj().T) / 2
    evals, evecs = np.linalg.eigh(m)
    signs = np.where(evals <= -zero_tol, -1.0, 1.0)
    return (evecs * signs) @ evecs.conj().T


def partial_trace(rho: np.ndarray, keep: Iterable[int], dims: Sequence[int]) -> np.ndarray:
    """Reduced operator on the parties in ``keep`` (returned in ascending party order)."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    total = int(np.prod(dims))
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (total, total):
        raise ValueError(f"operator of shape {rho.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid party index in {keep}")
    traced = [p for p in range(n) if p not in keep]
    t = rho.reshape(dims + dims)
    # trace pairs from the highest index down so axis numbers stay valid
    for p in sorted(traced, reverse=True):
        t = np.trace(t, axis1=p, axis2=p + t.ndim // 2)
    d_keep = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d_keep, d_keep)


def reduced_density(vector: np.ndarray, keep: Iterable[int], dims: Sequence[int]) -> np.ndarray:
    """Reduced density operator of a pure state without forming ``|v><v|``."""
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(int(k) for k in keep))
    rest = [p for p in range(len(dims)) if p not in keep]
    t = np.asarray(vector, dtype=complex).reshape(dims)
    t = np.transpose(t, keep + rest)
    d_keep = int(np.prod([dims[k] for k in keep]))
    m = t.reshape(d_keep, -1)
    return m @ m.conj().T


def fidelity(rho: np.ndarray, psi: StateVector | np.ndarray) -> float:
    """``<psi|rho|psi>`` for a density operator and a pure state."""
    vec = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex).reshape(-1)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (vec.size, vec.size):
        raise ValueError(f"density operator of shape {rho.shape} vs state of length {vec.size}")
    return float(np.real(np.vdot(vec, rho @ vec)))


def support_projector(psd: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the eigenvectors of a PSD matrix above ``tol``."""
    psd = np.asarray(psd, dtype=complex)
    evals, evecs = np.linalg.eigh((psd + psd.conj().T) / 2)
    basis = evecs[:, evals > tol]
    return basis @ basis.conj().T

"""Ideal measurement families and regularized operator extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .states import Graph, validate_schmidt
from .tensor import SIGMA_X, SIGMA_Z, is_hermitian, projectors_from_binary, regularized_polar

PVM_TOL = 1e-10


@dataclass(frozen=True)
class PVM:
    """Projective measurement; ``projectors[a]`` is the projector for outcome ``a``."""

    projectors: np.ndarray

    def __post_init__(self):
        p = np.array(self.projectors, dtype=complex)
        if p.ndim != 3 or p.shape[1] != p.shape[2] or p.shape[0] < 1:
            raise ValueError(f"projector stack has shape {p.shape}, expected (outcomes, d, d)")
        p.setflags(write=False)
        object.__setattr__(self, "projectors", p)

    @property
    def n_outcomes(self) -> int:
        return self.projectors.shape[0]

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    def observable(self) -> np.ndarray:
        """``P_0 - P_1`` for a two-outcome measurement (outcome 0 is the +1 eigenvalue)."""
        if self.n_outcomes != 2:
            raise ValueError(f"an observable needs two outcomes, this PVM has {self.n_outcomes}")
        return self.projectors[0] - self.projectors[1]

    def violations(self) -> dict[str, float]:
        p = self.projectors
        eye = np.eye(self.dim)
        idem = max(np.max(np.abs(q @ q - q)) for q in p)
        herm = max(np.max(np.abs(q - q.conj().T)) for q in p)
        cross = 0.0
        for a in range(len(p)):
            for b in range(a + 1, len(p)):
                cross = max(cross, np.max(np.abs(p[a] @ p[b])))
        complete = np.max(np.abs(p.sum(axis=0) - eye))
        return {"idempotent": float(idem), "hermitian": float(herm),
                "orthogonal": float(cross), "complete": float(complete)}

    def is_valid(self, tol: float = PVM_TOL) -> bool:
        return all(v <= tol for v in self.violations().values())

    @classmethod
    def from_binary(cls, w: np.ndarray) -> "PVM":
        return cls(np.stack(projectors_from_binary(w)))

    @classmethod
    def from_basis(cls, vectors: Sequence[np.ndarray]) -> "PVM":
        return cls(np.stack([np.outer(v, np.conj(v)) for v in vectors]))


# a party's settings, indexed by question
PartyMeasurements = tuple


def validate_party(settings: Sequence[PVM], tol: float = PVM_TOL) -> None:
    dims = {pvm.dim for pvm in settings}
    if len(dims) > 1:
        raise ValueError(f"settings of one party act on different dimensions {sorted(dims)}")
    for x, pvm in enumerate(settings):
        bad = {k: v for k, v in pvm.violations().items() if v > tol}
        if bad:
            raise ValueError(f"setting {x} is not a valid PVM: {bad}")


def tilted_pair(mu: float) -> tuple[np.ndarray, np.ndarray]:
    """``cos(mu) Z + sin(mu) X`` and ``cos(mu) Z - sin(mu) X``."""
    if not 0 < mu < np.pi / 2:
        raise ValueError(f"mu={mu} outside (0, pi/2)")
    c, s = np.cos(mu), np.sin(mu)
    return c * SIGMA_Z + s * SIGMA_X, c * SIGMA_Z - s * SIGMA_X


def alpha_from_theta(theta: float) -> float:
    if not 0 < theta <= np.pi / 4 + 1e-15:
        raise ValueError(f"theta={theta} outside (0, pi/4]")
    s2 = np.sin(2 * theta)
    return float(2 * np.cos(2 * theta) / np.sqrt(1 + s2**2))


def mu_from_theta(theta: float) -> float:
    """``arctan(sin 2 theta)``; defined for any theta in (0, pi/2)."""
    if not 0 < theta < np.pi / 2:
        raise ValueError(f"theta={theta} outside (0, pi/2)")
    return float(np.arctan(np.sin(2 * theta)))


def theta_from_alpha(alpha: float) -> float:
    if not 0 <= alpha < 2:
        raise ValueError(f"alpha={alpha} outside [0, 2)")
    return float(0.5 * np.arcsin(np.sqrt((4 - alpha**2) / (4 + alpha**2))))


def tilted_chsh_max(alpha: float) -> float:
    return float(np.sqrt(8 + 2 * alpha**2))


def extract_zx(b0: np.ndarray, b1: np.ndarray, mu: float, zero_tol: float = 1e-10):
    """Regularized Z and X built from the sum and difference of a party's two observables."""
    if not 0 < mu < np.pi / 2:
        raise ValueError(f"mu={mu} outside (0, pi/2)")
    b0 = np.asarray(b0, dtype=complex)
    b1 = np.asarray(b1, dtype=complex)
    z = regularized_polar((b0 + b1) / (2 * np.cos(mu)), zero_tol)
    x = regularized_polar((b0 - b1) / (2 * np.sin(mu)), zero_tol)
    return z, x


def block_basis(m: int, d: int, shifted: bool) -> tuple[int, int]:
    start = 2 * m + 1 if shifted else 2 * m
    return start % d, (start + 1) % d


def block_observable(a: np.ndarray, m: int, d: int, shifted: bool = False) -> np.ndarray:
    """Embed a 2x2 operator into the span of ``|2m>, |2m+1>`` (or ``|2m+1>, |2m+2>``), mod d."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError("block operator must be 2x2")
    if m < 0 or 2 * m + (1 if shifted else 0) >= d:
        raise ValueError(f"block index {m} does not fit in dimension {d}")
    i, j = block_basis(m, d, shifted)
    if i == j:
        raise ValueError(f"block {m} collapses in dimension {d}")
    out = np.zeros((d, d), dtype=complex)
    idx = [i, j]
    for r in range(2):
        for c in range(2):
            out[idx[r], idx[c]] = a[r, c]
    return out


def _block_pvm(blocks: dict[int, np.ndarray], singles: Sequence[int], d: int, shifted: bool) -> PVM:
    """d-outcome PVM from 2x2 blocks; block m contributes outcomes (first, second) of its basis.

    The +1 eigenvector of block m gets the outcome of the block's first basis
    index and the -1 eigenvector the second; ``singles`` are rank-one outcomes
    on a basis ket.
    """
    proj = np.zeros((d, d, d), dtype=complex)
    for m, a in blocks.items():
        i, j = block_basis(m, d, shifted)
        plus, minus = projectors_from_binary(a)
        for outcome, p in ((i, plus), (j, minus)):
            proj[outcome][np.ix_([i, j], [i, j])] = p
    for k in singles:
        proj[k, k, k] = 1.0
    return PVM(proj)


def schmidt_angles(c: Sequence[float]) -> tuple[list[float], list[float]]:
    """Block angles ``arctan(c_{2m+1}/c_{2m})`` and shifted ones ``arctan(c_{2m+2}/c_{2m+1})`` (mod d)."""
    c = np.asarray(c, dtype=float)
    d = c.size
    n_blocks = d // 2
    thetas = [float(np.arctan(c[2 * m + 1] / c[2 * m])) for m in range(n_blocks)]
    n_shift = d // 2 if d % 2 == 0 else (d - 1) // 2
    primes = [float(np.arctan(c[(2 * m + 2) % d] / c[2 * m + 1])) for m in range(n_shift)]
    return thetas, primes


def computational_pvm(d: int) -> PVM:
    return PVM(np.stack([np.diag(np.eye(d)[k]).astype(complex) for k in range(d)]))


def ideal_ghz_measurements(n: int, theta: float, *, last_angle: str = "mu") -> list[tuple[PVM, ...]]:
    """Z/X for all parties but the last, which measures the tilted pair.

    ``last_angle="theta"`` uses theta itself as the tilt angle instead of
    ``arctan(sin 2 theta)``; that variant does not reach the tilted CHSH
    maximum and exists for negative tests.
    """
    if n < 2:
        raise ValueError("need at least two parties")
    if not 0 < theta < np.pi / 2:
        raise ValueError(f"theta={theta} outside (0, pi/2)")
    if last_angle == "mu":
        angle = mu_from_theta(theta)
    elif last_angle == "theta":
        angle = float(theta)
    else:
        raise ValueError(f"unknown last_angle {last_angle!r}")
    zx = (PVM.from_binary(SIGMA_Z), PVM.from_binary(SIGMA_X))
    b0, b1 = tilted_pair(angle)
    return [zx] * (n - 1) + [(PVM.from_binary(b0), PVM.from_binary(b1))]


def ideal_schmidt_measurements(c: Sequence[float], n: int) -> list[tuple[PVM, ...]]:
    c = validate_schmidt(c)
    if n < 2:
        raise ValueError("need at least two parties")
    d = c.size
    odd = d % 2 == 1
    n_blocks = d // 2
    n_shift = d // 2 if not odd else (d - 1) // 2
    thetas, primes = schmidt_angles(c)

    x_blocks = {m: SIGMA_X for m in range(n_blocks)}
    x_shift = {m: SIGMA_X for m in range(n_shift)}
    others = (
        computational_pvm(d),
        _block_pvm(x_blocks, [d - 1] if odd else [], d, shifted=False),
        _block_pvm(x_shift, [0] if odd else [], d, shifted=True),
    )

    settings = []
    for sign in (+1, -1):
        blocks = {}
        for m, th in enumerate(thetas):
            mu = mu_from_theta(th)
            blocks[m] = np.cos(mu) * SIGMA_Z + sign * np.sin(mu) * SIGMA_X
        settings.append(_block_pvm(blocks, [d - 1] if odd else [], d, shifted=False))
    for sign in (+1, -1):
        blocks = {}
        for m, th in enumerate(primes):
            mu = mu_from_theta(th)
            blocks[m] = np.cos(mu) * SIGMA_Z + sign * np.sin(mu) * SIGMA_X
        settings.append(_block_pvm(blocks, [0] if odd else [], d, shifted=True))
    return [others] * (n - 1) + [tuple(settings)]


def chsh_optimal_pair() -> tuple[np.ndarray, np.ndarray]:
    """``(Z + X)/sqrt2`` and ``(Z - X)/sqrt2``."""
    return tilted_pair(np.pi / 4)


def ideal_w_measurements(n: int) -> list[tuple[PVM, ...]]:
    if n < 2:
        raise ValueError("need at least two parties")
    zx = (PVM.from_binary(SIGMA_Z), PVM.from_binary(SIGMA_X))
    d, e = chsh_optimal_pair()
    return [zx] * (n - 1) + [(PVM.from_binary(d), PVM.from_binary(e))]


def ideal_graph_measurements(g: Graph) -> list[tuple[PVM, ...]]:
    return ideal_w_measurements(g.n_vertices)


def binary_observable(pvm: PVM) -> np.ndarray:
    w = pvm.observable()
    if not is_hermitian(w, 1e-10):
        raise ValueError("observable is not Hermitian")
    return w

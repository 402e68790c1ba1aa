"""Reference states: partially entangled GHZ, Schmidt, Dicke/W and graph states."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .tensor import SIGMA_X, StateVector, apply_local


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n_vertices - 1``."""

    n_vertices: int
    edges: frozenset

    def __init__(self, n_vertices: int, edges: Iterable[Sequence[int]]):
        n = int(n_vertices)
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        normalized = set()
        for edge in edges:
            a, b = (int(v) for v in edge)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) references a vertex outside 0..{n - 1}")
            e = (min(a, b), max(a, b))
            if e in normalized:
                raise ValueError(f"duplicate edge {e}")
            normalized.add(e)
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", frozenset(normalized))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degree(self, v: int) -> int:
        return len(neighbors(self, v))

    def to_json(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: dict | str) -> "Graph":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(data["n"], data["edges"])
        except KeyError as exc:
            raise ValueError(f"graph description is missing field {exc.args[0]!r}") from None

    def relabeled(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n_vertices, [(perm[a], perm[b]) for a, b in self.edges])


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a ring needs at least 3 vertices")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int, center: int = 0) -> Graph:
    return Graph(n, [(center, v) for v in range(n) if v != center])


def complete_graph(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def neighbors(g: Graph, i: int) -> frozenset:
    if not 0 <= i < g.n_vertices:
        raise ValueError(f"vertex {i} not in graph with {g.n_vertices} vertices")
    return frozenset(b if a == i else a for a, b in g.edges if i in (a, b))


def pair_neighbors(g: Graph, i: int, j: int) -> frozenset:
    """Vertices adjacent to ``i`` or ``j``, excluding ``i`` and ``j`` themselves."""
    return (neighbors(g, i) | neighbors(g, j)) - {i, j}


def selftest_labeling(g: Graph) -> tuple[Graph, list[int]]:
    """Relabel so the last vertex has minimal (non-zero) degree and is adjacent to the second-to-last.

    Returns the relabeled graph and ``perm`` with ``perm[old] = new``.
    """
    n = g.n_vertices
    if n < 2:
        raise ValueError("need at least two vertices")
    degrees = [g.degree(v) for v in range(n)]
    if min(degrees) == 0:
        raise ValueError("graph has an isolated vertex")
    last = min(range(n), key=lambda v: (degrees[v], -v))
    partner = max(neighbors(g, last))
    rest = [v for v in range(n) if v not in (last, partner)]
    order = rest + [partner, last]
    perm = [0] * n
    for new, old in enumerate(order):
        perm[old] = new
    return g.relabeled(perm), perm


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0 < theta <= np.pi / 4 + 1e-15:
        raise ValueError(f"theta={theta} outside (0, pi/4]")
    return theta


def ghz_amplitudes(n: int, theta: float) -> np.ndarray:
    """``cos(theta)|0..0> + sin(theta)|1..1>`` for any angle, no range check."""
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = np.cos(theta)
    amps[-1] = np.sin(theta)
    return amps


def ghz_state(n: int, theta: float) -> StateVector:
    if n < 2:
        raise ValueError("GHZ states need at least two parties")
    theta = _check_theta(theta)
    return StateVector((2,) * n, ghz_amplitudes(n, theta))


def validate_schmidt(c: Sequence[float]) -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.size < 2:
        raise ValueError("need at least two Schmidt coefficients")
    if np.any(c <= 0) or np.any(c >= 1):
        raise ValueError(f"Schmidt coefficients must lie strictly in (0, 1): {c}")
    if abs(np.sum(c**2) - 1) > 1e-12:
        raise ValueError(f"squared Schmidt coefficients sum to {np.sum(c ** 2)!r}, not 1")
    return c


def random_schmidt(d: int, rng: np.random.Generator) -> np.ndarray:
    c = rng.uniform(0.2, 1.0, size=d)
    return c / np.linalg.norm(c)


def schmidt_state(c: Sequence[float], n: int) -> StateVector:
    c = validate_schmidt(c)
    d = c.size
    t = np.zeros((d,) * n, dtype=complex)
    for j, cj in enumerate(c):
        t[(j,) * n] = cj
    return StateVector((d,) * n, t.reshape(-1))


def dicke_state(n: int, k: int) -> StateVector:
    if not 0 <= k <= n:
        raise ValueError(f"excitation number k={k} outside 0..{n}")
    amps = np.zeros(2**n, dtype=complex)
    for ones in itertools.combinations(range(n), k):
        # party 0 is the most significant bit
        idx = sum(1 << (n - 1 - p) for p in ones)
        amps[idx] = 1.0
    return StateVector((2,) * n, amps / np.sqrt(comb(n, k)))


def w_state(n: int) -> StateVector:
    return dicke_state(n, 1)


def _flip_last(psi: StateVector) -> StateVector:
    t = apply_local(SIGMA_X, psi.n_parties - 1, psi.tensor())
    return StateVector(psi.dims, t.reshape(-1))


def x_dicke_state(n: int, k: int) -> StateVector:
    """Dicke state with a bit flip on the last party."""
    return _flip_last(dicke_state(n, k))


def x_w_state(n: int) -> StateVector:
    return _flip_last(w_state(n))


def edge_count_signs(g: Graph) -> np.ndarray:
    """(-1)^(number of edges with both endpoints set) for every computational ket."""
    n = g.n_vertices
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    mu = np.zeros(2**n, dtype=int)
    for a, b in g.edges:
        mu += bits[:, a] & bits[:, b]
    return (-1.0) ** mu


def graph_state(g: Graph) -> StateVector:
    n = g.n_vertices
    return StateVector((2,) * n, edge_count_signs(g) / np.sqrt(2**n))

"""Oscillator-network specifications, generators and adjacency matrices.

A network is a set of unit-mass harmonic oscillators with a common bare
frequency omega0, coupled by springs of strength h_ij (frequency^2 units,
hbar = k_B = 1 throughout).  Its Hamiltonian quadratic form is the adjacency
matrix A with A_ii = omega_i^2 / 2 and A_ij = -h_ij / 2, where the effective
frequency omega_i^2 = omega0^2 + sum_j h_ij absorbs the springlike diagonal
shift.  With that shift A is omega0^2/2 * I plus half the weighted graph
Laplacian, so every network is stable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DisconnectedNetwork, NotPositiveDefinite, ValidationError

STABILITY_RTOL = 1e-12  # eigenvalue must exceed this times the largest one

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class NetworkSpec:
    """Node count, bare frequency and weighted undirected edge list.

    Edges are (i, j, h) with i < j and h > 0.  This is the ground truth that
    gets generated, simulated and (blindly) recovered.
    """

    n_nodes: int
    omega0: float
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValidationError(f"n_nodes must be positive, got {self.n_nodes}")
        if self.omega0 <= 0:
            raise ValidationError(f"omega0 must be positive, got {self.omega0}")
        seen = set()
        for i, j, h in self.edges:
            if i == j:
                raise ValidationError(f"self-edge ({i},{j}) not allowed")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValidationError(f"edge ({i},{j}) out of range for {self.n_nodes} nodes")
            if i > j:
                raise ValidationError(f"edge ({i},{j}) must be ordered i < j")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i},{j})")
            if h <= 0:
                raise ValidationError(f"coupling on edge ({i},{j}) must be positive, got {h}")
            seen.add((i, j))

    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges, key=lambda e: (e[0], e[1])))

    def is_connected(self) -> bool:
        if self.n_nodes == 1:
            return True
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == self.n_nodes


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric quadratic-form matrix of a network Hamiltonian."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValidationError(f"adjacency matrix must be square, got shape {a.shape}")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise ValidationError("adjacency matrix must be symmetric")
        object.__setattr__(self, "a", 0.5 * (a + a.T))

    @property
    def dim(self) -> int:
        return self.a.shape[0]


# ---------------------------------------------------------------------------
# Topology recipes


@dataclass(frozen=True)
class Chain:
    n: int
    h: float


@dataclass(frozen=True)
class PeriodicChain:
    """Chain where every period-th coupling is replaced by a weaker one."""

    n: int
    h_strong: float
    h_weak: float
    period: int


@dataclass(frozen=True)
class ShortcutChain:
    """Homogeneous chain plus one extra link between two non-adjacent nodes."""

    n: int
    h: float
    shortcut: tuple[int, int]
    h_shortcut: float


@dataclass(frozen=True)
class SmallWorld:
    """Chain backbone plus n_shortcuts extra links sampled uniformly."""

    n: int
    h_chain: float
    h_shortcut: float
    n_shortcuts: int


@dataclass(frozen=True)
class ErdosRenyi:
    """Each of the n(n-1)/2 possible edges present independently with p_edge."""

    n: int
    h: float
    p_edge: float


RecipeKind = Union[Chain, PeriodicChain, ShortcutChain, SmallWorld, ErdosRenyi]


@dataclass(frozen=True)
class TopologyRecipe:
    kind: RecipeKind
    rng_seed: int = 0

    def __post_init__(self):
        k = self.kind
        if k.n < 1:
            raise ValidationError(f"node count must be positive, got {k.n}")
        if isinstance(k, Chain):
            _require_positive(h=k.h)
        elif isinstance(k, PeriodicChain):
            _require_positive(h_strong=k.h_strong, h_weak=k.h_weak)
            if k.period < 2:
                raise ValidationError(f"period must be >= 2, got {k.period}")
        elif isinstance(k, ShortcutChain):
            _require_positive(h=k.h, h_shortcut=k.h_shortcut)
            a, b = k.shortcut
            if not (0 <= a < k.n and 0 <= b < k.n):
                raise ValidationError(f"shortcut endpoints {k.shortcut} out of range")
            if a == b:
                raise ValidationError("shortcut endpoints must be distinct")
            if abs(a - b) == 1:
                raise ValidationError("shortcut endpoints must be non-adjacent in the chain")
        elif isinstance(k, SmallWorld):
            _require_positive(h_chain=k.h_chain, h_shortcut=k.h_shortcut)
            n_pairs = k.n * (k.n - 1) // 2 - (k.n - 1)
            if not (0 <= k.n_shortcuts <= n_pairs):
                raise ValidationError(
                    f"n_shortcuts={k.n_shortcuts} must be in [0, {n_pairs}] for n={k.n}"
                )
        elif isinstance(k, ErdosRenyi):
            _require_positive(h=k.h)
            if not (0 < k.p_edge <= 1.0):
                raise ValidationError(f"p_edge must be in (0, 1], got {k.p_edge}")
        else:
            raise ValidationError(f"unknown recipe kind {type(k).__name__}")


def _require_positive(**params: float) -> None:
    for name, value in params.items():
        if value <= 0:
            raise ValidationError(f"{name} must be positive, got {value}")


# ---------------------------------------------------------------------------
# Operations


def generate(
    recipe: TopologyRecipe,
    omega0: float,
    require_connected: bool = False,
    max_retries: int = 100,
) -> NetworkSpec:
    """Build a NetworkSpec from a recipe, deterministically for a given seed.

    Random recipes (SmallWorld shortcut placement, ErdosRenyi edge sampling)
    draw from a generator seeded with recipe.rng_seed.  When
    require_connected is set, disconnected samples are redrawn up to
    max_retries times before giving up.
    """
    rng = np.random.default_rng(recipe.rng_seed)
    for _ in range(max(1, max_retries)):
        edges = _sample_edges(recipe.kind, rng)
        spec = NetworkSpec(n_nodes=recipe.kind.n, omega0=omega0, edges=tuple(sorted(edges)))
        if not require_connected or spec.is_connected():
            return spec
    raise DisconnectedNetwork(
        f"no connected sample found in {max_retries} draws for {type(recipe.kind).__name__}"
    )


def _sample_edges(kind: RecipeKind, rng: np.random.Generator) -> list[Edge]:
    n = kind.n
    if isinstance(kind, Chain):
        return [(i, i + 1, kind.h) for i in range(n - 1)]
    if isinstance(kind, PeriodicChain):
        # couplings are numbered from 1; every period-th one is the weak one
        return [
            (i, i + 1, kind.h_weak if (i + 1) % kind.period == 0 else kind.h_strong)
            for i in range(n - 1)
        ]
    if isinstance(kind, ShortcutChain):
        a, b = min(kind.shortcut), max(kind.shortcut)
        return [(i, i + 1, kind.h) for i in range(n - 1)] + [(a, b, kind.h_shortcut)]
    if isinstance(kind, SmallWorld):
        edges: list[Edge] = [(i, i + 1, kind.h_chain) for i in range(n - 1)]
        candidates = [(i, j) for i in range(n) for j in range(i + 2, n)]
        picks = rng.choice(len(candidates), size=kind.n_shortcuts, replace=False)
        for p in sorted(picks):
            i, j = candidates[p]
            edges.append((i, j, kind.h_shortcut))
        return edges
    if isinstance(kind, ErdosRenyi):
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < kind.p_edge:
                    edges.append((i, j, kind.h))
        return edges
    raise ValidationError(f"unknown recipe kind {type(kind).__name__}")


def to_adjacency(spec: NetworkSpec) -> AdjacencyMatrix:
    """Adjacency matrix with the springlike diagonal shift.

    A_ii = (omega0^2 + sum_j h_ij) / 2 and A_ij = -h_ij / 2, i.e. half the
    h-weighted graph Laplacian plus omega0^2/2 on the diagonal.
    """
    n = spec.n_nodes
    a = np.zeros((n, n))
    np.fill_diagonal(a, 0.5 * spec.omega0**2)
    for i, j, h in spec.edges:
        a[i, j] -= 0.5 * h
        a[j, i] -= 0.5 * h
        a[i, i] += 0.5 * h
        a[j, j] += 0.5 * h
    return AdjacencyMatrix(a)


def validate_stability(adj: AdjacencyMatrix) -> np.ndarray:
    """Eigenvalues of the adjacency matrix, descending, if all are positive.

    Each eigenvalue equals Omega_i^2 / 2 for an eigenfrequency Omega_i.
    Raises NotPositiveDefinite when the smallest eigenvalue does not exceed
    STABILITY_RTOL times the largest.
    """
    evals = np.linalg.eigvalsh(adj.a)
    if evals[0] <= STABILITY_RTOL * evals[-1]:
        raise NotPositiveDefinite(float(evals[0]))
    return evals[::-1].copy()


def permute_nodes(spec: NetworkSpec, perm: list[int] | np.ndarray) -> NetworkSpec:
    """Relabel nodes by perm (node i of the input becomes perm[i])."""
    perm = list(perm)
    if sorted(perm) != list(range(spec.n_nodes)):
        raise ValidationError("perm must be a permutation of range(n_nodes)")
    edges = tuple(
        sorted(
            (min(perm[i], perm[j]), max(perm[i], perm[j]), h) for i, j, h in spec.edges
        )
    )
    return NetworkSpec(n_nodes=spec.n_nodes, omega0=spec.omega0, edges=edges)

"""Graph representation and the block-structured random graph model.

Graphs are dense 0/1 ``numpy`` arrays (dtype ``uint8``): symmetric, with a
zero diagonal. The ideal model is a disjoint union of complete graphs laid
out contiguously; the observed graph is that model XOR-ed with an
Erdos-Renyi graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from os import PathLike
from typing import Sequence

import numpy as np

ADJ_DTYPE = np.uint8


class DegenerateGraphError(ValueError):
    """A normalized Laplacian was requested for a graph with isolated nodes."""


class LaplacianKind(enum.Enum):
    UNNORMALIZED = "unnormalized"
    SYMMETRIC = "symmetric"
    RANDOM_WALK = "randomwalk"

    @classmethod
    def parse(cls, value: "str | LaplacianKind") -> "LaplacianKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {"unnormalized": cls.UNNORMALIZED, "l": cls.UNNORMALIZED,
                   "symmetric": cls.SYMMETRIC, "sym": cls.SYMMETRIC,
                   "randomwalk": cls.RANDOM_WALK, "rw": cls.RANDOM_WALK}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown Laplacian kind {value!r}") from None


@dataclass(frozen=True)
class BlockSpec:
    """Block sizes of the ideal model, smallest block first."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(c) for c in self.sizes)
        if not sizes:
            raise ValueError("BlockSpec needs at least one block")
        if any(c < 2 for c in sizes):
            raise ValueError(f"every block size must be >= 2, got {sizes}")
        if any(a > b for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"block sizes must be nondecreasing, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_unsorted(cls, sizes: Sequence[int]) -> "BlockSpec":
        return cls(tuple(sorted(int(c) for c in sizes)))

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def labels(self) -> np.ndarray:
        """Ground-truth block label of every node."""
        return np.repeat(np.arange(self.k), self.sizes)

    def indicators(self) -> np.ndarray:
        """n x k 0/1 matrix whose columns are the block indicators."""
        return np.eye(self.k)[self.labels()]


def check_adjacency(a) -> np.ndarray:
    """Validate ``a`` as a simple undirected graph and return it as uint8."""
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"adjacency matrix must be square and nonempty, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diag(arr) != 0):
        raise ValueError("adjacency matrix must have a zero diagonal (no self-loops)")
    if not np.array_equal(arr, arr.T):
        raise ValueError("adjacency matrix must be symmetric")
    return arr.astype(ADJ_DTYPE, copy=False)


def generate_ideal(spec: BlockSpec) -> np.ndarray:
    """Adjacency matrix of the disjoint union of complete graphs K_{c_i}."""
    if not isinstance(spec, BlockSpec):
        spec = BlockSpec(tuple(spec))
    labels = spec.labels()
    a = (labels[:, None] == labels[None, :]).astype(ADJ_DTYPE)
    np.fill_diagonal(a, 0)
    return a


def generate_er(n: int, p: float, seed=None) -> np.ndarray:
    """Erdos-Renyi G(n, p) adjacency matrix.

    The upper triangle is drawn i.i.d. Bernoulli(p) in row-major order from a
    PCG64 generator seeded with ``seed`` (an int, a ``SeedSequence`` or a
    ``Generator``), then mirrored.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    b = np.zeros((n, n), dtype=ADJ_DTYPE)
    b[iu] = rng.random(iu[0].size) < p
    return b | b.T


def perturb(a, b) -> np.ndarray:
    """Entrywise XOR of two adjacency matrices (addition mod 2)."""
    a = check_adjacency(a)
    b = check_adjacency(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.bitwise_xor(a, b)


def perturbed_model(spec: BlockSpec, p: float, seed=None) -> np.ndarray:
    a_star = generate_ideal(spec)
    return perturb(a_star, generate_er(spec.n, p, seed))


def shuffle_nodes(a, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Relabel nodes by a random permutation.

    Returns ``(b, perm)`` with ``b[i, j] == a[perm[i], perm[j]]``; node ``i`` of
    ``b`` is node ``perm[i]`` of ``a``.
    """
    a = check_adjacency(a)
    perm = np.random.default_rng(seed).permutation(a.shape[0])
    return a[np.ix_(perm, perm)], perm


def degrees(a) -> np.ndarray:
    return check_adjacency(a).sum(axis=1, dtype=np.int64)


def laplacian(a, kind: LaplacianKind | str = LaplacianKind.UNNORMALIZED) -> np.ndarray:
    """Graph Laplacian of the requested kind as a float matrix.

    ``SYMMETRIC`` is ``D^-1/2 A D^-1/2`` (the normalized adjacency) and
    ``RANDOM_WALK`` is ``I - D^-1 A``; both need every degree to be positive.
    """
    kind = LaplacianKind.parse(kind)
    a = check_adjacency(a).astype(float)
    d = a.sum(axis=1)
    if kind is LaplacianKind.UNNORMALIZED:
        return np.diag(d) - a
    if np.any(d == 0):
        isolated = np.flatnonzero(d == 0)
        raise DegenerateGraphError(
            f"{kind.value} Laplacian undefined: isolated node(s) {isolated.tolist()}")
    if kind is LaplacianKind.SYMMETRIC:
        s = 1.0 / np.sqrt(d)
        return s[:, None] * a * s[None, :]
    return np.eye(a.shape[0]) - a / d[:, None]


def connected_components(a) -> np.ndarray:
    """Component label per node, numbered by first occurrence (BFS)."""
    a = check_adjacency(a)
    n = a.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    neighbours = [np.flatnonzero(row) for row in a]
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = current
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nb in neighbours[node]:
                if labels[nb] < 0:
                    labels[nb] = current
                    frontier.append(nb)
        current += 1
    return labels


def canonical_labels(labels) -> np.ndarray:
    """Renumber labels 0, 1, ... in order of first occurrence."""
    labels = np.asarray(labels)
    mapping: dict = {}
    out = np.empty(labels.shape[0], dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out


def edge_count(a) -> int:
    return int(np.triu(check_adjacency(a), k=1).sum())


# --- file formats -----------------------------------------------------------

def write_edge_list(a, path: str | PathLike) -> None:
    """Write ``u<TAB>v`` lines (u < v, 0-based) in row-major order."""
    a = check_adjacency(a)
    us, vs = np.nonzero(np.triu(a, k=1))
    with open(path, "w", newline="\n") as fh:
        fh.writelines(f"{u}\t{v}\n" for u, v in zip(us.tolist(), vs.tolist()))


def read_edge_list(path: str | PathLike, n: int | None = None) -> np.ndarray:
    """Read an edge list; ``n`` defaults to ``1 + max id``.

    Isolated trailing nodes are only representable by passing ``n``.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u<TAB>v', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise ValueError(f"{path}:{lineno}: self-loop on node {u}")
            edges.append((u, v))
    size = max((max(e) for e in edges), default=-1) + 1
    if n is None:
        n = max(size, 1)
    elif size > n:
        raise ValueError(f"node id {size - 1} out of range for n={n}")
    a = np.zeros((n, n), dtype=ADJ_DTYPE)
    for u, v in edges:
        if a[u, v]:
            raise ValueError(f"duplicate edge {u}-{v}")
        a[u, v] = a[v, u] = 1
    return a


def write_dense(a, path: str | PathLike) -> None:
    a = check_adjacency(a)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(" ".join(map(str, row.tolist())) + "\n")


def read_dense(path: str | PathLike) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty file")
    n = int(tokens[0])
    if len(tokens) - 1 != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, found {len(tokens) - 1}")
    return check_adjacency(np.array(tokens[1:], dtype=np.int64).reshape(n, n))


def read_graph(path: str | PathLike, n: int | None = None) -> np.ndarray:
    """Read either format, sniffing the first line (a lone integer means dense)."""
    with open(path) as fh:
        first = ""
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                first = line
                break
    if len(first.split()) == 1:
        return read_dense(path)
    return read_edge_list(path, n=n)

"""Spectral clustering and l1-spectral clustering.

Classical spectral clustering embeds nodes with k Laplacian eigenvectors
and runs k-means on the rows. l1-spectral clustering drops k-means: for each
cluster it anchors a representative node at 1 and finds the sparsest vector
(in l1) orthogonal to the bottom of the adjacency spectrum, then deflates the
matrix by that vector before looking for the next cluster.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import spectral
from .bpsolver import (FEAS_TOL, OPT_TOL, BasisPursuitProblem, SolverError, SolverReport,
                       solve_bp)
from .graphmodel import LaplacianKind, canonical_labels, check_adjacency, laplacian

log = logging.getLogger(__name__)


class ClusterSolveError(SolverError):
    """The basis pursuit step failed for one cluster."""

    def __init__(self, cluster_index: int, report: SolverReport):
        super().__init__(
            f"basis pursuit for cluster {cluster_index} ended with status "
            f"{report.status.value} (residual {report.constraint_residual:.3e})", report)
        self.cluster_index = cluster_index


@dataclass(frozen=True)
class SpectralConfig:
    k: int
    laplacian: LaplacianKind = LaplacianKind.UNNORMALIZED
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 300
    seed: int | None = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")
        object.__setattr__(self, "laplacian", LaplacianKind.parse(self.laplacian))


@dataclass
class IndicatorMatrix:
    """Cluster indicators: ``raw`` before thresholding, ``binary`` after.

    ``failures`` lists ``(cluster_index, report)`` for clusters whose solve did
    not reach optimality (only populated with ``on_failure="fallback"``).
    """

    raw: np.ndarray
    binary: np.ndarray
    representatives: np.ndarray
    threshold: float = 0.5
    failures: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.raw.shape[1]


# --- k-means -----------------------------------------------------------------

@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    wcss: float
    iterations: int


def _kmeanspp(points, k, rng):
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a center
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def _sq_dists(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(points, centers, max_iter):
    n, k = points.shape[0], centers.shape[0]
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        dist = _sq_dists(points, centers)
        new = np.argmin(dist, axis=1)
        # repair empty clusters with the point farthest from its own centroid
        for j in range(k):
            if np.any(new == j):
                continue
            own = dist[np.arange(n), new]
            counts = np.bincount(new, minlength=k)
            own[counts[new] <= 1] = -1.0
            far = int(np.argmax(own))
            new[far] = j
            dist[far, :] = np.inf
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.stack([points[labels == j].mean(axis=0) for j in range(k)])
    wcss = float(np.sum((points - centers[labels]) ** 2))
    return labels, centers, wcss, it


def kmeans_fit(points, k: int, restarts: int = 10, max_iter: int = 300, seed=None) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by WCSS."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centers, wcss, its = _lloyd(points, _kmeanspp(points, k, rng), max_iter)
        if best is None or wcss < best.wcss:
            best = KMeansResult(labels, centers, wcss, its)
    order = canonical_labels(best.labels)
    # keep centers aligned with the renumbered labels
    remap = np.empty(k, dtype=np.int64)
    remap[order] = best.labels
    return KMeansResult(order, best.centers[remap], best.wcss, best.iterations)


def kmeans(points, k: int, restarts: int = 10, max_iter: int = 300, seed=None) -> np.ndarray:
    return kmeans_fit(points, k, restarts, max_iter, seed).labels


# --- spectral clustering ------------------------------------------------------

def spectral_embedding(a, k: int, kind=LaplacianKind.UNNORMALIZED,
                       method: str = spectral.DEFAULT_METHOD) -> np.ndarray:
    """n x k matrix of informative Laplacian eigenvectors.

    Bottom of the spectrum for the unnormalized and random-walk Laplacians,
    top for the normalized adjacency ``D^-1/2 A D^-1/2``.
    """
    kind = LaplacianKind.parse(kind)
    if kind is LaplacianKind.SYMMETRIC:
        return spectral.top_k(spectral.eig_sym(laplacian(a, kind), method=method), k)
    values, vectors = spectral.laplacian_eig(a, kind, method=method)
    return vectors[:, :k]


def spectral_clustering(a, cfg: SpectralConfig) -> np.ndarray:
    a = check_adjacency(a)
    if cfg.k > a.shape[0]:
        raise ValueError(f"k={cfg.k} exceeds the node count {a.shape[0]}")
    emb = spectral_embedding(a, cfg.k, cfg.laplacian)
    return kmeans(emb, cfg.k, cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.seed)


# --- l1-spectral clustering ---------------------------------------------------

def select_representatives(a, k: int) -> np.ndarray:
    """Greedy hub picking: highest degree first, then skip its neighbourhood."""
    a = check_adjacency(a)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    deg = a.sum(axis=1).astype(np.int64)
    candidate = np.ones(n, dtype=bool)
    picked: list[int] = []
    while len(picked) < k and candidate.any():
        node = int(np.argmax(np.where(candidate, deg, -1)))
        picked.append(node)
        candidate[node] = False
        candidate[a[node] == 1] = False
    if len(picked) < k:
        rest = np.ones(n, dtype=bool)
        rest[picked] = False
        # stable sort on -degree keeps the lowest id first among ties
        order = np.argsort(-deg, kind="stable")
        picked.extend(int(i) for i in order if rest[i])
        picked = picked[:k]
    return np.array(picked, dtype=np.int64)


def _next_representative(deg, recovered, taken, threshold) -> int:
    """Lowest-degree node outside every cluster recovered so far.

    Degree grows with block size in the perturbed model, so this visits the
    smallest remaining cluster first, the order in which the anchored l1
    problem isolates components. When every node is covered, the node least
    claimed by the recovered columns is used (then lowest degree, lowest id).
    """
    n = deg.shape[0]
    free = np.ones(n, dtype=bool)
    free[taken] = False
    covered = (recovered > threshold).any(axis=1) if recovered.size else np.zeros(n, dtype=bool)
    pool = free & ~covered
    if pool.any():
        return int(np.argmin(np.where(pool, deg, np.iinfo(np.int64).max)))
    claim = recovered.max(axis=1)
    order = np.lexsort((np.arange(n), deg, claim))
    return int(next(i for i in order if free[i]))


def _check_reps(reps, k, n) -> np.ndarray:
    reps = np.asarray(reps, dtype=np.int64).ravel()
    if reps.size != k:
        raise ValueError(f"expected {k} representatives, got {reps.size}")
    if np.any(reps < 0) or np.any(reps >= n):
        raise ValueError(f"representatives must lie in [0, {n})")
    if np.unique(reps).size != reps.size:
        raise ValueError("representatives must be distinct")
    return reps


def anchored_problem(m, count: int, rep: int,
                     eig_method: str = spectral.DEFAULT_METHOD) -> BasisPursuitProblem:
    """Basis pursuit problem for one cluster of the working matrix ``m``.

    ``T`` is the transpose of the ``count`` bottom eigenvectors; the unknown is
    the indicator without its anchor entry, so ``W = T`` minus column ``rep``
    and ``w = T[:, rep]``.
    """
    T = spectral.bottom_k(spectral.eig_sym(m, method=eig_method), count).T
    return BasisPursuitProblem(np.delete(T, rep, axis=1), T[:, rep])


def l1_spectral(a, k: int, reps: Sequence[int] | None = None, threshold: float = 0.5, *,
                use_laplacian: bool = False, width: str = "growing",
                on_failure: str = "raise", eig_method: str = spectral.DEFAULT_METHOD,
                feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL) -> IndicatorMatrix:
    """l1-spectral clustering of a graph with ``k`` clusters.

    For cluster ``j`` (0-based) the working matrix is decomposed, its
    ``n - k + j`` smallest-eigenvalue eigenvectors form ``V``, and the solve is

        min ||v||_1  s.t.  V'[:, -r] v = -V'[:, r]

    with ``r = reps[j]``. The solution with a 1 spliced in at ``r`` is the raw
    indicator; the working matrix is then deflated by its outer product.
    ``width="fixed"`` always keeps ``n - k`` eigenvectors instead.

    ``reps`` is an explicit list of node ids, ``None`` (use
    :func:`select_representatives`) or ``"adaptive"`` (pick each anchor just
    before its solve, see :func:`_next_representative`).
    ``use_laplacian`` runs on ``-L`` rather than the adjacency matrix.
    ``on_failure="fallback"`` keeps the solver's best vector for a failed
    cluster and records it in ``failures`` instead of raising.
    """
    a = check_adjacency(a)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if width not in ("growing", "fixed"):
        raise ValueError(f"width must be 'growing' or 'fixed', got {width!r}")
    if on_failure not in ("raise", "fallback"):
        raise ValueError(f"on_failure must be 'raise' or 'fallback', got {on_failure!r}")
    adaptive = isinstance(reps, str)
    if adaptive:
        if reps != "adaptive":
            raise ValueError(f"unknown representative mode {reps!r}")
        deg = a.sum(axis=1).astype(np.int64)
        reps = np.full(k, -1, dtype=np.int64)
    elif reps is None:
        reps = select_representatives(a, k)
    else:
        reps = _check_reps(reps, k, n)

    work = -laplacian(a) if use_laplacian else a.astype(float)
    raw = np.zeros((n, k))
    failures = []
    for j in range(k):
        count = n - k + j if width == "growing" else n - k
        if adaptive:
            reps[j] = _next_representative(deg, raw[:, :j], reps[:j], threshold)
        r = int(reps[j])
        if count == 0:
            v = np.zeros(n - 1)
        else:
            problem = anchored_problem(work, count, r, eig_method=eig_method)
            report = solve_bp(problem, feas_tol=feas_tol, opt_tol=opt_tol)
            if not report.ok:
                if on_failure == "raise":
                    raise ClusterSolveError(j, report)
                log.warning("cluster %d: solver status %s", j, report.status.value)
                failures.append((j, report))
            v = report.solution
        v_full = np.insert(v, r, 1.0)
        raw[:, j] = v_full
        work = spectral.deflate(work, v_full)
    binary = (raw > threshold).astype(np.uint8)
    return IndicatorMatrix(raw, binary, reps, threshold, failures)


def indicators_to_partition(f: IndicatorMatrix | np.ndarray) -> np.ndarray:
    """Label each node by its largest raw indicator (lowest column on ties)."""
    raw = f.raw if isinstance(f, IndicatorMatrix) else np.asarray(f, dtype=float)
    return np.argmax(raw, axis=1).astype(np.int64)

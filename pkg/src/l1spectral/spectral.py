"""Symmetric eigendecomposition with a fixed ordering and sign contract.

Two backends produce the same :class:`EigenBasis` contract:

* ``"jacobi"``: cyclic Jacobi rotations in round-robin (parallel) order, so
  every round applies n/2 disjoint rotations with whole-array numpy ops;
* ``"lapack"``: ``numpy.linalg.eigh``. This is the default because the
  clustering loop decomposes hundreds of matrices per benchmark run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphmodel import LaplacianKind, laplacian, check_adjacency, DegenerateGraphError

SYMMETRY_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
_SIGN_TIE_TOL = 1e-12

DEFAULT_METHOD = "lapack"


class EigenConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenBasis:
    """Eigenvalues ascending; ``vectors[:, j]`` pairs with ``values[j]``."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return m


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) pair once over n-1 rounds (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        left, right = players[:half], players[half:][::-1]
        p = np.array([min(a, b) for a, b in zip(left, right)])
        q = np.array([max(a, b) for a, b in zip(left, right)])
        rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(m, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Unsorted eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius norm is ``<= tol * ||m||_F``.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy(), np.ones((1, 1))
    # an odd size gets a decoupled zero row/column that no rotation touches
    size = n + (n % 2)
    if size != n:
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(size)
    target = tol * np.linalg.norm(m)
    rounds = _round_robin(size)

    offdiag = ~np.eye(size, dtype=bool)

    def off_norm():
        return np.linalg.norm(a[offdiag])

    for _ in range(max_sweeps):
        if off_norm() <= target:
            break
        for p, q in rounds:
            if size != n:
                keep = q < n
                p, q = p[keep], q[keep]
            apq = a[p, q]
            active = np.abs(apq) > 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    else:
        if off_norm() > target:
            raise EigenConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off_norm():.3e})")
    return a.diagonal()[:n].copy(), v[:n, :n].copy()


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry (lowest index on ties) is positive."""
    mags = np.abs(vectors)
    peak = mags.max(axis=0, keepdims=True)
    first = np.argmax(mags >= peak - _SIGN_TIE_TOL, axis=0)
    signs = np.where(vectors[first, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return vectors * signs


def eig_sym(m, method: str = DEFAULT_METHOD) -> EigenBasis:
    """Eigendecomposition of a symmetric matrix, ascending and sign-normalized."""
    m = _check_symmetric(m)
    if method == "jacobi":
        values, vectors = jacobi_eigh(m)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(m)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = _orient(vectors[:, order])
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenBasis(values, vectors)


def _check_count(basis: EigenBasis, count: int) -> int:
    count = int(count)
    if not 1 <= count <= basis.n:
        raise ValueError(f"count must be in [1, {basis.n}], got {count}")
    return count


def bottom_k(basis: EigenBasis, count: int) -> np.ndarray:
    """Eigenvectors of the ``count`` smallest eigenvalues, ascending."""
    count = _check_count(basis, count)
    return np.array(basis.vectors[:, :count])


def top_k(basis: EigenBasis, count: int) -> np.ndarray:
    """Eigenvectors of the ``count`` largest eigenvalues, largest first."""
    count = _check_count(basis, count)
    return np.array(basis.vectors[:, ::-1][:, :count])


def deflate(m, v) -> np.ndarray:
    """Rank-one deflation ``m - v v^T``."""
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float).ravel()
    if m.ndim != 2 or m.shape != (v.size, v.size):
        raise ValueError(f"dimension mismatch: matrix {m.shape}, vector {v.shape}")
    return m - np.outer(v, v)


def laplacian_eig(a, kind, method: str = DEFAULT_METHOD) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and right eigenvectors of a graph Laplacian.

    The random-walk Laplacian is not symmetric; its eigenpairs come from the
    similar matrix ``I - D^-1/2 A D^-1/2`` with vectors mapped back by
    ``D^-1/2`` and rescaled to unit length (they are not orthogonal).
    """
    kind = LaplacianKind.parse(kind)
    if kind is not LaplacianKind.RANDOM_WALK:
        basis = eig_sym(laplacian(a, kind), method=method)
        return np.array(basis.values), np.array(basis.vectors)
    a = check_adjacency(a)
    d = a.sum(axis=1).astype(float)
    if np.any(d == 0):
        raise DegenerateGraphError("randomwalk Laplacian undefined: graph has isolated nodes")
    similar = np.eye(a.shape[0]) - laplacian(a, LaplacianKind.SYMMETRIC)
    basis = eig_sym((similar + similar.T) / 2.0, method=method)
    vectors = basis.vectors / np.sqrt(d)[:, None]
    vectors = _orient(vectors / np.linalg.norm(vectors, axis=0))
    return np.array(basis.values), vectors

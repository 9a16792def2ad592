"""
PCA by power iteration with deflation.

Center, build the covariance, then pull out one eigenvector at a time:
iterate v <- Cv / |Cv| until both the eigenvalue estimate and the vector
stop moving, subtract lambda * v v^T from C, repeat. Each iterate is also
re-orthogonalized against the components already found, which keeps
later components clean even when early ones converged a hair short.

If the data has rank below k, the remaining eigenvalues are zero and we
return fewer components instead of inventing directions.
"""

from typing import List, Optional

import numpy as np
from logzero import logger
from pydantic import BaseModel, ConfigDict
from sklearn.cluster import KMeans

from app.nn.rng import make_rng

EIGENVALUE_RTOL = 1e-9
VECTOR_TOL = 1e-10
MAX_ITER = 100_000
# eigenvalues below this share of the total variance count as zero
RANK_TOL = 1e-12


class Projection3D(BaseModel):
    """Coordinates on the top components, plus the components themselves."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    coordinates: np.ndarray  # [N x m]
    basis: np.ndarray  # [m x D], orthonormal rows
    eigenvalues: np.ndarray
    explained_variance: np.ndarray  # share of total variance per component
    num_components: int
    mean: np.ndarray

    def transform(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.mean) @ self.basis.T


def _orthogonalize(v: np.ndarray, found: List[np.ndarray]) -> np.ndarray:
    for u in found:
        v = v - (u @ v) * u
    return v


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive, so reruns agree on orientation
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def power_iteration(cov: np.ndarray, start: np.ndarray, found: List[np.ndarray],
                    max_iter: int = MAX_ITER, floor: float = 0.0):
    """
    Dominant eigenpair of a symmetric PSD matrix, restricted to the
    complement of `found`.

    Returns:
        (eigenvalue, unit eigenvector, iterations used); eigenvalue 0 and
        vector None once |Cv| drops to `floor` (nothing left on that complement)
    """
    v = _orthogonalize(start, found)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0, None, 0
    v = v / norm
    lam = float(v @ cov @ v)
    for it in range(1, max_iter + 1):
        w = _orthogonalize(cov @ v, found)
        norm = np.linalg.norm(w)
        if norm <= floor:
            return 0.0, None, it
        w = w / norm
        new_lam = float(w @ cov @ w)
        lam_change = abs(new_lam - lam) / max(abs(new_lam), np.finfo(float).tiny)
        vec_change = min(np.linalg.norm(w - v), np.linalg.norm(w + v))
        v, lam = w, new_lam
        if lam_change < EIGENVALUE_RTOL and vec_change < VECTOR_TOL:
            return lam, v, it
    logger.warning(f"power iteration stopped at max_iter={max_iter} (lambda={lam:.6g})")
    return lam, v, max_iter


def pca_project(representations: np.ndarray, k: int = 3, seed: int = 0,
                max_iter: int = MAX_ITER) -> Projection3D:
    """
    Project onto the top-k principal components.

    Args:
        representations: [N x D] sentence vectors
        k: Components wanted
        seed: Start vectors come from this seed's "pca" stream
        max_iter: Iteration cap per component

    Returns:
        Projection3D with num_components <= k

    Raises:
        ValueError: not 2-D, k < 1, or fewer rows than k
    """
    x = np.asarray(representations, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected [N x D], got shape {x.shape}")
    n, d = x.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(n - 1, 1)
    total = float(np.trace(cov))
    rng = make_rng(seed, "pca")

    found: List[np.ndarray] = []
    eigenvalues: List[float] = []
    deflated = cov.copy()
    for _ in range(min(k, d)):
        if total <= 0.0:
            break
        lam, vec, iters = power_iteration(deflated, rng.standard_normal(d), found, max_iter, floor=RANK_TOL * total)
        if vec is None or lam <= RANK_TOL * total:
            break
        vec = _canonical_sign(vec)
        found.append(vec)
        eigenvalues.append(lam)
        deflated = deflated - lam * np.outer(vec, vec)
        logger.debug(f"component {len(found)}: lambda={lam:.6g} after {iters} iterations")

    if len(found) < k:
        logger.info(f"data has rank {len(found)} < {k}; returning {len(found)} components")

    basis = np.array(found) if found else np.zeros((0, d))
    values = np.array(eigenvalues)
    shares = values / total if total > 0 else np.zeros(0)
    return Projection3D(
        coordinates=centered @ basis.T,
        basis=basis,
        eigenvalues=values,
        explained_variance=shares,
        num_components=len(found),
        mean=mean,
    )


def two_means(points: np.ndarray, seed: int = 0, restarts: int = 10) -> np.ndarray:
    """2-means cluster ids (0/1) with seeded restarts."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 2 or points.ndim != 2 or points.shape[1] == 0:
        return np.zeros(points.shape[0], dtype=np.int64)
    km = KMeans(n_clusters=2, n_init=restarts, random_state=int(make_rng(seed, "kmeans").integers(2**31 - 1)))
    return km.fit_predict(points).astype(np.int64)


def explained_summary(projection: Projection3D) -> Optional[str]:
    if projection.num_components == 0:
        return None
    return ", ".join(f"PC{i + 1}={share:.4f}" for i, share in enumerate(projection.explained_variance))

"""Per-point linearity from local PCA of fixed-radius neighborhoods.

For each point, the points within the neighborhood radius are centered,
their 3x3 sample covariance is formed, and the two largest eigenvalues
l1 >= l2 give the linearity (l1 - l2) / l1 in [0, 1]: 1 for a perfect
line, 0 for an isotropic distribution.  The default radius of 0.15 m is
a physical length chosen against typical branch radii, so the field is
computed on the full cloud in original metric coordinates before any
chunking or normalization.

compute_linearity_field is the vectorized pipeline over a whole cloud;
centralize / covariance / eigenvalues_sym3 / linearity are the same
steps exposed for a single neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import LabeledCloud
from .spatial import SpatialIndex, build_index

DEFAULT_RADIUS_M = 0.15

# Neighborhoods with fewer members than this have no usable covariance
# (divisor n-1 and a rank-deficient spread); their linearity is 0.
MIN_NEIGHBORS = 3


class DegenerateNeighborhoodError(ValueError):
    """Neighborhood too small for a sample covariance (n < 2)."""


@dataclass(frozen=True)
class CenteredNeighborhood:
    """Neighborhood points re-expressed relative to their mean."""

    centered_points: np.ndarray
    mean: np.ndarray
    count: int


@dataclass(frozen=True)
class LinearityField:
    """Per-point linearity values aligned with cloud order."""

    values: np.ndarray
    radius_m: float


def centralize(points) -> CenteredNeighborhood:
    """Subtract the component-wise mean from a neighborhood point set."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
        raise ValueError("centralize requires a non-empty (n, 3) point set")
    mean = pts.mean(axis=0)
    centered = pts - mean
    # Second pass removes the rounding residual so the centered mean is
    # zero to machine precision even for far-from-origin coordinates.
    resid = centered.mean(axis=0)
    centered -= resid
    return CenteredNeighborhood(centered_points=centered, mean=mean + resid, count=len(pts))


def covariance(centered: CenteredNeighborhood) -> np.ndarray:
    """Sample covariance (1/(n-1)) C^T C of the centered n x 3 matrix C."""
    if centered.count < 2:
        raise DegenerateNeighborhoodError(
            f"covariance needs at least 2 points, got {centered.count}"
        )
    c = centered.centered_points
    return (c.T @ c) / (centered.count - 1)


def _eigvalsh3_batch(mats: np.ndarray) -> np.ndarray:
    """Eigenvalues of symmetric 3x3 matrices, descending, via the
    trigonometric solution of the characteristic cubic.

    Args:
        mats: (..., 3, 3) symmetric matrices.

    Returns:
        (..., 3) eigenvalues sorted largest first.
    """
    a = mats[..., 0, 0]
    b = mats[..., 1, 1]
    c = mats[..., 2, 2]
    d = mats[..., 0, 1]
    e = mats[..., 0, 2]
    f = mats[..., 1, 2]

    q = (a + b + c) / 3.0
    p1 = d * d + e * e + f * f
    p2 = (a - q) ** 2 + (b - q) ** 2 + (c - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)

    scalar = p == 0.0  # multiple of the identity: triple eigenvalue q
    ps = np.where(scalar, 1.0, p)
    b00 = (a - q) / ps
    b11 = (b - q) / ps
    b22 = (c - q) / ps
    b01 = d / ps
    b02 = e / ps
    b12 = f / ps
    det_b = (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    r = np.clip(det_b / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0

    lam1 = q + 2.0 * p * np.cos(phi)
    lam3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    lam2 = 3.0 * q - lam1 - lam3
    out = np.stack([lam1, lam2, lam3], axis=-1)
    out = np.where(scalar[..., None], q[..., None] * np.ones(3), out)
    # Analytically ordered already; the sort only repairs last-ulp swaps.
    return np.sort(out, axis=-1)[..., ::-1]


def eigenvalues_sym3(sigma) -> np.ndarray:
    """Descending eigenvalues of a symmetric PSD 3x3 matrix.

    Negatives within a small tolerance of zero (rounding) are clamped to
    exactly 0; an asymmetric or indefinite matrix raises ValueError.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {sigma.shape}")
    scale = max(1.0, float(np.abs(sigma).max()))
    if float(np.abs(sigma - sigma.T).max()) > 1e-12 * scale:
        raise ValueError("matrix is asymmetric beyond tolerance")
    eigs = _eigvalsh3_batch(sigma)
    tol = 1e-10 * max(1.0, float(abs(eigs[0])))
    if eigs[-1] < -tol:
        raise ValueError(f"matrix is not positive semi-definite (min eig {eigs[-1]})")
    return np.maximum(eigs, 0.0)


def linearity(eigs) -> float:
    """Linearity (l1 - l2) / l1 of a descending eigenvalue triple.

    Defined as 0 when l1 == 0 (all neighborhood points coincide).
    """
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.shape != (3,):
        raise ValueError(f"expected 3 eigenvalues, got shape {eigs.shape}")
    lam1, lam2 = float(eigs[0]), float(eigs[1])
    if lam1 <= 0.0:
        return 0.0
    return float(np.clip((lam1 - lam2) / lam1, 0.0, 1.0))


def compute_linearity_field(
    cloud: LabeledCloud,
    index: SpatialIndex | None = None,
    radius_m: float = DEFAULT_RADIUS_M,
) -> LinearityField:
    """Linearity of every point from its closed-ball neighborhood.

    Pure over the cloud and index; neighborhoods with fewer than
    MIN_NEIGHBORS members get linearity 0.

    Args:
        cloud: source points (any labels/linearity are ignored).
        index: spatial index built over the same cloud; built on demand
            when omitted.
        radius_m: neighborhood radius in meters.
    """
    if radius_m <= 0:
        raise ValueError(f"radius must be positive, got {radius_m}")
    if index is None:
        index = build_index(cloud)
    if len(index) != len(cloud):
        raise ValueError("index size does not match cloud size")

    pts = cloud.points
    n = len(pts)
    neighbor_lists = index.query_radius_all(radius_m)
    counts = np.fromiter((len(lst) for lst in neighbor_lists), dtype=np.int64, count=n)
    flat = np.concatenate(
        [np.asarray(lst, dtype=np.int64) for lst in neighbor_lists]
    )
    seg = np.repeat(np.arange(n), counts)

    # Neighbor coordinates relative to each query point keep magnitudes
    # bounded by the radius, so the moment sums below do not cancel even
    # for clouds far from the origin.
    rel = pts[flat] - pts[seg]

    sums = np.empty((n, 3))
    for axis in range(3):
        sums[:, axis] = np.bincount(seg, weights=rel[:, axis], minlength=n)
    mean = sums / counts[:, None]

    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    moments = {
        (i, j): np.bincount(seg, weights=rel[:, i] * rel[:, j], minlength=n)
        for i, j in pairs
    }

    valid = counts >= MIN_NEIGHBORS
    denom = np.maximum(counts - 1, 1).astype(np.float64)
    cov = np.zeros((n, 3, 3))
    for i, j in pairs:
        entry = (moments[(i, j)] - counts * mean[:, i] * mean[:, j]) / denom
        cov[:, i, j] = entry
        cov[:, j, i] = entry

    values = np.zeros(n)
    if valid.any():
        eigs = np.maximum(_eigvalsh3_batch(cov[valid]), 0.0)
        lam1 = eigs[:, 0]
        lam2 = eigs[:, 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            lin = np.where(lam1 > 0.0, (lam1 - lam2) / np.where(lam1 > 0, lam1, 1.0), 0.0)
        values[valid] = np.clip(lin, 0.0, 1.0)
    return LinearityField(values=values, radius_m=radius_m)

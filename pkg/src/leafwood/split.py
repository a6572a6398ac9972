"""Partition oversized clouds into bounded chunks and merge results back.

Chunking is size-balanced (ceil(total/max) chunks whose sizes differ by
at most one) and spatially coherent: indices are divided by recursive
median splits along the widest bounding-box axis.  Each chunk can be
normalized into the unit ball for the network and the inverse transform
restores original coordinates; integrate() reassembles per-chunk results
into a complete cloud in the original point order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import LabeledCloud

DEFAULT_MAX_POINT_NUM = 100_000


@dataclass(frozen=True)
class SplitPlan:
    """Chunk count and balanced chunk sizes for a cloud of total_points."""

    total_points: int
    max_point_num: int
    num_chunks: int
    chunk_sizes: tuple[int, ...]


@dataclass(frozen=True)
class ChunkTransform:
    """Invertible per-chunk normalization: p' = (p - translation) / scale."""

    translation: np.ndarray
    scale: float


@dataclass(frozen=True)
class SplitRecord:
    """One recursive split: the axis used and the coordinate gap."""

    axis: int
    left_high: float
    right_low: float


def plan_split(total_points: int, max_point_num: int = DEFAULT_MAX_POINT_NUM) -> SplitPlan:
    """Balanced chunk sizes with ceil(total/max) chunks, each <= max."""
    if total_points < 1:
        raise ValueError(f"total_points must be >= 1, got {total_points}")
    if max_point_num < 1:
        raise ValueError(f"max_point_num must be >= 1, got {max_point_num}")
    num_chunks = -(-total_points // max_point_num)
    base, extra = divmod(total_points, num_chunks)
    sizes = tuple(base + 1 if i < extra else base for i in range(num_chunks))
    return SplitPlan(
        total_points=total_points,
        max_point_num=max_point_num,
        num_chunks=num_chunks,
        chunk_sizes=sizes,
    )


def _split_recursive(points, indices, sizes, out, records):
    if len(sizes) == 1:
        out.append(indices)
        return
    half = (len(sizes) + 1) // 2
    left_count = sum(sizes[:half])
    coords = points[indices]
    extent = coords.max(axis=0) - coords.min(axis=0)
    axis = int(np.argmax(extent))
    order = np.argsort(coords[:, axis], kind="stable")
    left = indices[order[:left_count]]
    right = indices[order[left_count:]]
    if records is not None:
        records.append(
            SplitRecord(
                axis=axis,
                left_high=float(points[left][:, axis].max()),
                right_low=float(points[right][:, axis].min()),
            )
        )
    _split_recursive(points, left, sizes[:half], out, records)
    _split_recursive(points, right, sizes[half:], out, records)


def split(
    cloud: LabeledCloud,
    plan: SplitPlan,
    records: list | None = None,
) -> list[tuple[LabeledCloud, np.ndarray]]:
    """Partition a cloud into spatially coherent chunks per the plan.

    Labels and linearity travel with their points.  Returns one
    (chunk, original-index array) pair per chunk; passing a list as
    ``records`` collects a SplitRecord per recursive median split.
    """
    if plan.total_points != len(cloud):
        raise ValueError(
            f"plan is for {plan.total_points} points but cloud has {len(cloud)}"
        )
    out: list[np.ndarray] = []
    _split_recursive(
        cloud.points, np.arange(len(cloud), dtype=np.int64), list(plan.chunk_sizes),
        out, records,
    )
    chunks = []
    for idx in out:
        chunk = LabeledCloud(
            cloud.points[idx],
            None if cloud.labels is None else cloud.labels[idx],
            None if cloud.linearity is None else cloud.linearity[idx],
        )
        chunks.append((chunk, idx))
    return chunks


def normalize_chunk(chunk: LabeledCloud) -> tuple[LabeledCloud, ChunkTransform]:
    """Center on the centroid and scale into the closed unit ball.

    The scale is the maximum distance from the centroid, or 1 when all
    points coincide.
    """
    if len(chunk) == 0:
        raise ValueError("cannot normalize an empty chunk")
    centroid = chunk.points.mean(axis=0)
    shifted = chunk.points - centroid
    scale = float(np.linalg.norm(shifted, axis=1).max())
    if scale == 0.0:
        scale = 1.0
    normalized = LabeledCloud(shifted / scale, chunk.labels, chunk.linearity)
    return normalized, ChunkTransform(translation=centroid, scale=scale)


def denormalize(chunk: LabeledCloud, transform: ChunkTransform) -> LabeledCloud:
    """Invert normalize_chunk: p = p' * scale + translation."""
    return LabeledCloud(
        chunk.points * transform.scale + transform.translation,
        chunk.labels,
        chunk.linearity,
    )


def integrate(
    chunks: list[tuple[LabeledCloud, np.ndarray]],
    total: int,
) -> LabeledCloud:
    """Merge labeled chunks back into a complete cloud in original order.

    Every original index must appear in exactly one chunk; coordinates,
    labels and linearity are taken from the chunk that owns each index.
    """
    points = np.empty((total, 3))
    seen = np.zeros(total, dtype=bool)
    have_labels = all(chunk.labels is not None for chunk, _ in chunks)
    have_linearity = all(chunk.linearity is not None for chunk, _ in chunks)
    labels = np.empty(total, dtype=np.uint8) if have_labels else None
    lin = np.empty(total) if have_linearity else None

    for chunk, idx in chunks:
        idx = np.asarray(idx, dtype=np.int64)
        if len(idx) != len(chunk):
            raise ValueError("chunk size does not match its index list")
        if len(idx) and (idx.min() < 0 or idx.max() >= total):
            bad = idx[(idx < 0) | (idx >= total)][0]
            raise ValueError(f"index {bad} out of range for total {total}")
        dup = idx[seen[idx]]
        if len(dup):
            raise ValueError(f"index {int(dup[0])} assigned to more than one chunk")
        seen[idx] = True
        points[idx] = chunk.points
        if have_labels:
            labels[idx] = chunk.labels
        if have_linearity:
            lin[idx] = chunk.linearity

    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise ValueError(f"index {missing} missing from every chunk")
    return LabeledCloud(points, labels, lin)

"""Point-cloud data model and file I/O (ASCII XYZ and colorized PLY export).

The on-disk interchange format is whitespace-delimited ASCII with 3, 4 or
5 columns per line::

    x y z [linearity] [label]

Comment lines start with ``#``.  An optional header comment of the form
``#fields x y z linearity`` disambiguates 4-column files (without it a
4th column is read as the label).  Labels are 0 = leaf, 1 = wood.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ._util import atomic_write

# Fig-3-style display colors for classified clouds.
WOOD_RGB = (139, 69, 19)  # brown
LEAF_RGB = (34, 139, 34)  # green


class ClassLabel(IntEnum):
    """Binary point class; wood is the positive class throughout."""

    LEAF = 0
    WOOD = 1


class CloudFileError(ValueError):
    """Raised for malformed cloud files; message carries path and line number."""


@dataclass(frozen=True)
class LabeledCloud:
    """Ordered 3D points with optional per-point labels and linearity.

    Point order is the file order and is preserved by every pipeline
    stage.  Instances are treated as immutable after construction.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    linearity: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points contain non-finite coordinates")
        object.__setattr__(self, "points", pts)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (len(pts),):
                raise ValueError(
                    f"labels length {labels.shape} does not match point count {len(pts)}"
                )
            if not np.isin(labels, (0, 1)).all():
                raise ValueError("labels must be 0 (leaf) or 1 (wood)")
            object.__setattr__(self, "labels", labels.astype(np.uint8))

        if self.linearity is not None:
            lin = np.asarray(self.linearity, dtype=np.float64)
            if lin.shape != (len(pts),):
                raise ValueError(
                    f"linearity length {lin.shape} does not match point count {len(pts)}"
                )
            if not np.isfinite(lin).all() or lin.min() < 0.0 or lin.max() > 1.0:
                raise ValueError("linearity values must lie in [0, 1]")
            object.__setattr__(self, "linearity", lin)

    def __len__(self) -> int:
        return len(self.points)

    def with_labels(self, labels) -> "LabeledCloud":
        return LabeledCloud(self.points, labels, self.linearity)

    def with_linearity(self, linearity) -> "LabeledCloud":
        return LabeledCloud(self.points, self.labels, linearity)


def _parse_fields_header(line: str) -> list[str] | None:
    body = line[1:].strip()
    if not body.lower().startswith("fields"):
        return None
    return body.split()[1:]


def load_xyz(path) -> LabeledCloud:
    """Load an ASCII XYZ cloud, preserving line order.

    Raises CloudFileError with the offending line number on malformed
    input: non-numeric or non-finite coordinates, mixed column counts,
    labels outside {0, 1}, or linearity outside [0, 1].
    """
    declared: list[str] | None = None
    xs: list[tuple[float, float, float]] = []
    lins: list[float] = []
    labs: list[int] = []
    ncols: int | None = None

    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = _parse_fields_header(line)
                if header is not None:
                    if xs:
                        raise CloudFileError(
                            f"{path}:{lineno}: #fields header must precede data"
                        )
                    declared = header
                continue
            parts = line.split()
            if len(parts) not in (3, 4, 5):
                raise CloudFileError(
                    f"{path}:{lineno}: expected 3, 4 or 5 fields, got {len(parts)}"
                )
            if ncols is None:
                ncols = len(parts)
            elif len(parts) != ncols:
                raise CloudFileError(
                    f"{path}:{lineno}: mixed field counts ({len(parts)} after {ncols})"
                )
            try:
                x, y, z = float(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise CloudFileError(f"{path}:{lineno}: malformed coordinate") from None
            if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
                raise CloudFileError(f"{path}:{lineno}: non-finite coordinate")
            xs.append((x, y, z))

            has_linearity = len(parts) == 5 or (
                len(parts) == 4 and declared is not None and "linearity" in declared
            )
            rest = parts[3:]
            if has_linearity:
                try:
                    value = float(rest[0])
                except ValueError:
                    raise CloudFileError(f"{path}:{lineno}: malformed linearity") from None
                if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                    raise CloudFileError(
                        f"{path}:{lineno}: linearity {value} outside [0, 1]"
                    )
                lins.append(value)
                rest = rest[1:]
            if rest:
                try:
                    label = int(rest[0])
                except ValueError:
                    raise CloudFileError(f"{path}:{lineno}: malformed label") from None
                if label not in (0, 1):
                    raise CloudFileError(
                        f"{path}:{lineno}: label {label} outside {{0, 1}}"
                    )
                labs.append(label)

    if not xs:
        raise CloudFileError(f"{path}: no points")
    return LabeledCloud(
        np.array(xs, dtype=np.float64),
        np.array(labs, dtype=np.uint8) if labs else None,
        np.array(lins, dtype=np.float64) if lins else None,
    )


def save_xyz(cloud: LabeledCloud, path) -> None:
    """Write a cloud in the same layout load_xyz reads back.

    Coordinates are written with full round-trip precision; a ``#fields``
    header names the columns.
    """
    if len(cloud) == 0:
        raise ValueError("cannot save an empty cloud")
    fields = ["x", "y", "z"]
    if cloud.linearity is not None:
        fields.append("linearity")
    if cloud.labels is not None:
        fields.append("label")
    with atomic_write(path) as handle:
        handle.write("#fields " + " ".join(fields) + "\n")
        for i in range(len(cloud)):
            x, y, z = cloud.points[i]
            cols = [repr(float(x)), repr(float(y)), repr(float(z))]
            if cloud.linearity is not None:
                cols.append(repr(float(cloud.linearity[i])))
            if cloud.labels is not None:
                cols.append(str(int(cloud.labels[i])))
            handle.write(" ".join(cols) + "\n")


def export_colored_ply(cloud: LabeledCloud, labels, path, binary: bool = False) -> None:
    """Export a classified cloud as PLY with wood brown and leaf green.

    Args:
        cloud: source points.
        labels: per-point class labels, same length as the cloud.
        path: output file.
        binary: write binary little-endian PLY instead of ASCII.
    """
    labels = np.asarray(labels)
    if labels.shape != (len(cloud),):
        raise ValueError(
            f"labels length {labels.shape} does not match point count {len(cloud)}"
        )
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 (leaf) or 1 (wood)")

    colors = np.where(
        labels[:, None] == ClassLabel.WOOD,
        np.array(WOOD_RGB, dtype=np.uint8),
        np.array(LEAF_RGB, dtype=np.uint8),
    ).astype(np.uint8)

    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        "ply\n"
        f"format {fmt} 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    )
    mode = "wb" if binary else "w"
    with atomic_write(path, mode) as handle:
        if binary:
            handle.write(header.encode("ascii"))
            packer = struct.Struct("<dddBBB")
            for p, c in zip(cloud.points, colors):
                handle.write(packer.pack(p[0], p[1], p[2], c[0], c[1], c[2]))
        else:
            handle.write(header)
            for p, c in zip(cloud.points, colors):
                handle.write(
                    f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r} "
                    f"{c[0]} {c[1]} {c[2]}\n"
                )

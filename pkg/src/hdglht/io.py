"""File ingestion: group data, contrast matrices and weight tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contrasts import ContrastMatrix
from .errors import ColumnMismatch, DimensionMismatch, ParseError
from .kernels import GroupSample, group_sample
from .weights import WeightSpec

__all__ = [
    "DatasetManifest",
    "load_groups",
    "load_matrix",
    "load_contrast",
    "load_weights",
]


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered group files; order defines the contrast's column order."""

    group_files: tuple[str, ...]
    has_header: bool = False
    delimiter: str = ","
    group_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        files = tuple(str(f) for f in self.group_files)
        if len(files) < 2:
            raise DimensionMismatch(f"need at least 2 group files, got {len(files)}")
        labels = tuple(self.group_labels) or tuple(Path(f).stem for f in files)
        if len(labels) != len(files):
            raise DimensionMismatch(
                f"{len(labels)} labels given for {len(files)} group files"
            )
        object.__setattr__(self, "group_files", files)
        object.__setattr__(self, "group_labels", labels)

    @property
    def k(self) -> int:
        return len(self.group_files)


def load_matrix(path, delimiter: str = ",", has_header: bool = False) -> np.ndarray:
    """Read a fully numeric delimited file; any bad cell is a hard error."""
    path = Path(path)
    rows: list[list[float]] = []
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}", path=str(path)) from exc
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ParseError(
                    f"{path}:{lineno}: non-numeric cell ({exc})",
                    path=str(path),
                    line=lineno,
                ) from exc
    if not rows:
        raise ParseError(f"{path}: no data rows", path=str(path))
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(
            f"{path}: ragged rows with widths {sorted(widths)}", path=str(path)
        )
    return np.asarray(rows, dtype=float)


def load_groups(manifest: DatasetManifest) -> list[GroupSample]:
    """Load all groups in manifest order, enforcing a common column count."""
    samples = []
    widths = []
    for f in manifest.group_files:
        data = load_matrix(f, delimiter=manifest.delimiter, has_header=manifest.has_header)
        widths.append(data.shape[1])
        samples.append(group_sample(data))
    if len(set(widths)) != 1:
        detail = ", ".join(
            f"{Path(f).name}:{w} cols" for f, w in zip(manifest.group_files, widths)
        )
        raise ColumnMismatch(f"group files disagree on p: {detail}")
    return samples


def load_contrast(path, delimiter: str = ",") -> ContrastMatrix:
    """Contrast file: q rows of k numeric columns, no header."""
    return ContrastMatrix(load_matrix(path, delimiter=delimiter, has_header=False))


def load_weights(path) -> WeightSpec:
    """Weight file: header ``alpha,beta2`` then p rows of the two columns."""
    path = Path(path)
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}", path=str(path)) from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty weights file", path=str(path)) from None
        cols = [c.strip().lower() for c in header]
        if cols != ["alpha", "beta2"]:
            raise ParseError(
                f"{path}: weights header must be 'alpha,beta2', got {header}",
                path=str(path),
                line=1,
            )
        a_vals, b2_vals = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 2 columns, got {len(row)}",
                    path=str(path),
                    line=lineno,
                )
            try:
                a_vals.append(float(row[0]))
                b2_vals.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(
                    f"{path}:{lineno}: non-numeric cell ({exc})",
                    path=str(path),
                    line=lineno,
                ) from exc
    if not a_vals:
        raise ParseError(f"{path}: no weight rows", path=str(path))
    return WeightSpec(a=np.asarray(a_vals), b2=np.asarray(b2_vals))

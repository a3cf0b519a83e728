"""Response data ingestion, matching criterion and group split."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np


class SchemaError(ValueError):
    """Raised when response data violates the binary-matrix schema."""


@dataclass(frozen=True)
class ResponseMatrix:
    """Binary responses of ``n`` respondents to ``I`` items plus a group label.

    Group ``0`` is the reference group and ``1`` the focal group.
    """

    responses: np.ndarray
    item_names: tuple[str, ...]
    group: np.ndarray

    def __post_init__(self):
        responses = np.asarray(self.responses)
        group = np.asarray(self.group)
        if responses.ndim != 2:
            raise SchemaError("responses must be a 2-D array")
        n, n_items = responses.shape
        if len(self.item_names) != n_items:
            raise SchemaError(
                f"{len(self.item_names)} item names for {n_items} item columns"
            )
        if len(set(self.item_names)) != n_items:
            raise SchemaError("item names must be unique")
        if group.shape != (n,):
            raise SchemaError("group must have one label per respondent")
        if not np.isin(responses, (0, 1)).all():
            r, c = np.argwhere(~np.isin(responses, (0, 1)))[0]
            raise SchemaError(
                f"non-binary response {responses[r, c]!r} at row {r}, "
                f"item {self.item_names[c]!r}"
            )
        if not np.isin(group, (0, 1)).all():
            raise SchemaError("group labels must be 0 (reference) or 1 (focal)")
        n1 = int(group.sum())
        n0 = n - n1
        if n0 == 0 or n1 == 0:
            raise SchemaError(f"both groups need respondents, got n0={n0}, n1={n1}")
        responses = responses.astype(np.int8)
        responses.setflags(write=False)
        group = group.astype(np.int8)
        group.setflags(write=False)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "item_names", tuple(self.item_names))

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def n_items(self) -> int:
        return self.responses.shape[1]

    @property
    def n0(self) -> int:
        return int((self.group == 0).sum())

    @property
    def n1(self) -> int:
        return int((self.group == 1).sum())

    def item_index(self, item: int | str) -> int:
        if isinstance(item, str):
            try:
                return self.item_names.index(item)
            except ValueError:
                raise KeyError(f"unknown item {item!r}") from None
        return int(item)


@dataclass(frozen=True)
class GroupedScores:
    """Matching-criterion values split into reference and focal sets."""

    theta0: np.ndarray
    theta1: np.ndarray

    def __post_init__(self):
        t0 = np.asarray(self.theta0, dtype=float)
        t1 = np.asarray(self.theta1, dtype=float)
        if t0.size == 0 or t1.size == 0:
            raise ValueError("both groups must be non-empty")
        if not (np.isfinite(t0).all() and np.isfinite(t1).all()):
            raise ValueError("matching scores must be finite")
        object.__setattr__(self, "theta0", t0)
        object.__setattr__(self, "theta1", t1)

    @property
    def n0(self) -> int:
        return self.theta0.size

    @property
    def n1(self) -> int:
        return self.theta1.size

    @property
    def lambda_hat(self) -> float:
        return self.n0 / (self.n0 + self.n1)

    @property
    def effective_n(self) -> float:
        """``n0 * n1 / (n0 + n1)``, the scaling of the normalised statistic."""
        return self.n0 * self.n1 / (self.n0 + self.n1)


def load_response_csv(
    source: str | IO[str] | IO[bytes],
    group_col: str = "group",
    reference_label: str | None = None,
    items: Sequence[str] | None = None,
) -> ResponseMatrix:
    """Read a wide CSV of binary responses with one group column.

    Parameters
    ----------
    source : path, text stream or byte stream
        UTF-8, comma separated, with a header row.
    group_col : str
        Name of the column holding group membership.
    reference_label : str, optional
        Raw group value that denotes the reference group. When omitted the
        larger group is the reference (ties broken by sorted label order).
    items : sequence of str, optional
        Item columns to keep. Defaults to every column except ``group_col``.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SchemaError("empty CSV: header row required")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if group_col not in header:
        raise SchemaError(f"group column {group_col!r} not found in header")
    g_idx = header.index(group_col)
    if items is None:
        item_cols = [i for i, h in enumerate(header) if i != g_idx]
    else:
        missing = [it for it in items if it not in header]
        if missing:
            raise SchemaError(f"item columns not found: {missing}")
        item_cols = [header.index(it) for it in items]

    labels = []
    matrix = np.empty((len(body), len(item_cols)), dtype=np.int8)
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise SchemaError(f"row {r}: expected {len(header)} cells, got {len(row)}")
        label = row[g_idx].strip()
        if label == "" or label.upper() == "NA":
            raise SchemaError(f"row {r}: missing group label")
        labels.append(label)
        for j, c in enumerate(item_cols):
            cell = row[c].strip()
            if cell not in ("0", "1"):
                raise SchemaError(
                    f"row {r}, column {header[c]!r}: non-binary cell {cell!r}"
                )
            matrix[r - 2, j] = int(cell)

    distinct = sorted(set(labels))
    if len(distinct) != 2:
        raise SchemaError(
            f"group column must hold exactly two labels, found {distinct}"
        )
    if reference_label is None:
        counts = {lab: labels.count(lab) for lab in distinct}
        reference_label = max(distinct, key=lambda lab: (counts[lab], -distinct.index(lab)))
    elif reference_label not in distinct:
        raise SchemaError(
            f"reference label {reference_label!r} not among group labels {distinct}"
        )
    group = np.array([0 if lab == reference_label else 1 for lab in labels])
    return ResponseMatrix(matrix, tuple(header[c] for c in item_cols), group)


def standardized_total_score(rm: ResponseMatrix) -> np.ndarray:
    """Total score over all items, standardised over the pooled sample.

    The studied item is part of the total (no purification) and the sample
    standard deviation uses the ``n - 1`` divisor.
    """
    totals = rm.responses.sum(axis=1, dtype=float)
    return standardize(totals)


def standardize(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two values to standardise")
    sd = values.std(ddof=1)
    if not sd > 0:
        raise ValueError("total scores have zero variance; matching criterion is degenerate")
    return (values - values.mean()) / sd


def split_groups(rm: ResponseMatrix, scores: np.ndarray) -> GroupedScores:
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (rm.n,):
        raise ValueError(f"expected {rm.n} scores, got shape {scores.shape}")
    return GroupedScores(scores[rm.group == 0], scores[rm.group == 1])

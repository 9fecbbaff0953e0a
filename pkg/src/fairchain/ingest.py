"""Reading and writing score tables, and loading the German Credit data."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import EmptyDatasetError, InputError, ScoredDataset

GERMAN_COMPONENTS = ("credit_amount", "age", "num_credits", "num_liable")
# attribute 9, personal status and sex
SEX_CODES = {"A91": "male", "A93": "male", "A94": "male", "A92": "female", "A95": "female"}


@dataclass(frozen=True)
class ScoreTableSchema:
    """Column bindings for a score CSV.

    ``score_columns=None`` takes every column other than id, group and label,
    in header order. ``label=None`` uses a ``label`` column when one exists.
    """

    item_id: str = "item_id"
    group: str = "group"
    label: str | None = None
    score_columns: tuple[str, ...] | None = None
    require_label: bool = False


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise InputError(f"row {row}, column {col!r}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(v):
        raise InputError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return v


def read_csv(source, schema: ScoreTableSchema | None = None) -> ScoredDataset:
    """Parse a score table from an open text stream."""
    schema = schema or ScoreTableSchema()
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyDatasetError("file is empty (no header row)") from None
    label_col = schema.label
    if label_col is None and "label" in header and schema.group != "label":
        label_col = "label"
    if schema.require_label and label_col is None:
        raise InputError("missing column 'label'")
    score_cols = schema.score_columns
    if score_cols is None:
        reserved = {schema.item_id, schema.group, label_col}
        score_cols = tuple(h for h in header if h not in reserved)
    for col in (schema.item_id, schema.group, *( [label_col] if label_col else []), *score_cols):
        if col not in header:
            raise InputError(f"missing column {col!r}")
    if not score_cols:
        raise InputError("no score columns")
    pos = {h: i for i, h in enumerate(header)}
    ids, groups, labels, scores = [], [], [], []
    seen = set()
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"row {line_no}: expected {len(header)} fields, got {len(row)}")
        item = row[pos[schema.item_id]]
        if item in seen:
            raise InputError(f"row {line_no}: duplicate item_id {item!r}")
        seen.add(item)
        ids.append(item)
        groups.append(row[pos[schema.group]])
        if label_col:
            cell = row[pos[label_col]].strip()
            if cell not in ("0", "1"):
                raise InputError(f"row {line_no}, column {label_col!r}: label must be 0 or 1, got {cell!r}")
            labels.append(int(cell))
        scores.append([_parse_float(row[pos[c]], line_no, c) for c in score_cols])
    if not ids:
        raise EmptyDatasetError("no data rows")
    if len(set(groups)) < 2:
        raise InputError(f"need two distinct groups, found {sorted(set(groups))}")
    return ScoredDataset(
        ids=ids,
        groups=groups,
        scores=np.array(scores, dtype=np.float64),
        labels=np.array(labels) if label_col else None,
        component_names=tuple(score_cols),
    )


def load_csv(path, schema: ScoreTableSchema | None = None) -> ScoredDataset:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh, schema)


def format_score(x: float) -> str:
    return format(float(x), ".17g")


def dumps_csv(dataset: ScoredDataset, scores: np.ndarray | None = None) -> str:
    """Serialize in the standard ``item_id,group[,label],score_0..`` layout."""
    s = dataset.scores if scores is None else np.asarray(scores)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["item_id", "group"] + (["label"] if dataset.has_labels else [])
    header += [f"score_{k}" for k in range(s.shape[1])]
    w.writerow(header)
    for i, item in enumerate(dataset.ids):
        row = [str(item), dataset.groups[i]]
        if dataset.has_labels:
            row.append(str(int(dataset.labels[i])))
        row.extend(format_score(v) for v in s[i])
        w.writerow(row)
    return buf.getvalue()


def write_csv(dataset: ScoredDataset, path, scores: np.ndarray | None = None) -> None:
    Path(path).write_text(dumps_csv(dataset, scores), encoding="utf-8")


@dataclass(frozen=True)
class GermanCreditRecord:
    attributes: tuple[str, ...]  # the 20 raw attributes, codes as in the file
    outcome: int  # 1 good, 2 bad
    sex: str
    credit_amount: int
    age: int
    num_credits: int
    num_liable: int


def german_credit_path() -> Path:
    return Path(str(resources.files("fairchain") / "data" / "german.data"))


def read_german_records(path=None) -> list[GermanCreditRecord]:
    path = Path(path) if path is not None else german_credit_path()
    records = []
    with open(path, encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 21:
                raise InputError(f"line {line_no}: expected 21 fields, got {len(fields)}")
            code = fields[8]
            if code not in SEX_CODES:
                raise InputError(f"line {line_no}: unknown personal-status code {code!r}")
            try:
                nums = [int(fields[i]) for i in (4, 12, 15, 17, 20)]
            except ValueError:
                raise InputError(f"line {line_no}: non-integer numeric attribute") from None
            if min(nums[:4]) <= 0:
                raise InputError(f"line {line_no}: numeric attributes must be positive")
            records.append(GermanCreditRecord(tuple(fields[:20]), nums[4], SEX_CODES[code], *nums[:4]))
    if not records:
        raise EmptyDatasetError(f"{path}: no records")
    return records


def load_german_credit(path=None) -> ScoredDataset:
    """German Credit as four components: credit amount, age, number of
    existing credits and number of people liable. Group A is male."""
    recs = read_german_records(path)
    return ScoredDataset(
        ids=[str(i) for i in range(1, len(recs) + 1)],
        groups=[r.sex for r in recs],
        scores=np.array([[r.credit_amount, r.age, r.num_credits, r.num_liable] for r in recs],
                        dtype=np.float64),
        component_names=GERMAN_COMPONENTS,
        group_order=("male", "female") if {r.sex for r in recs} == {"male", "female"} else (),
    )


def equalize_groups(
    dataset: ScoredDataset,
    composite: Sequence[float] | np.ndarray | None = None,
    mode: str = "first",
    seed: int | None = None,
) -> ScoredDataset:
    """Cut the larger group down to the smaller group's size N.

    ``mode`` picks the N kept members: ``"first"`` in dataset order,
    ``"top"`` the N highest by ``composite`` (ties keep dataset order), or
    ``"random"`` a seeded sample. Relative item order is preserved.
    """
    a, b = dataset.require_two_groups()
    ma, mb = dataset.mask(a), dataset.mask(b)
    na, nb = int(ma.sum()), int(mb.sum())
    if na == nb:
        return dataset
    big, small_n = (ma, nb) if na > nb else (mb, na)
    members = np.flatnonzero(big)
    if mode == "first":
        keep = members[:small_n]
    elif mode == "top":
        if composite is None:
            raise InputError("mode 'top' needs composite scores")
        c = np.asarray(composite, dtype=np.float64)
        if c.shape != (len(dataset),):
            raise InputError("composite length does not match dataset")
        keep = members[np.argsort(-c[members], kind="stable")[:small_n]]
    elif mode == "random":
        keep = np.random.default_rng(seed).choice(members, small_n, replace=False)
    else:
        raise InputError(f"unknown equalize mode {mode!r}")
    index = np.sort(np.concatenate([np.flatnonzero(~big), keep]))
    return dataset.subset(index)

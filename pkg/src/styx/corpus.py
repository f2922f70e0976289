"""Blog corpus ingestion: CSV reading, age-group derivation, seeded balancing."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InputError


class AgeGroup(Enum):
    """Writer age bands. Ages under 18 map to no group and are filtered."""

    YOUNG = "young"              # 18-34
    MIDDLE_AGED = "middle_aged"  # 35-41
    OLD = "old"                  # 42 and up

    @property
    def label(self) -> str:
        """Human-readable form used in prompts and report headers."""
        return self.value.replace("_", "-")


GROUP_ORDER = (AgeGroup.YOUNG, AgeGroup.MIDDLE_AGED, AgeGroup.OLD)

_BY_VALUE = {g.value: g for g in GROUP_ORDER}


def group_from_value(value: str) -> AgeGroup:
    try:
        return _BY_VALUE[value]
    except KeyError:
        raise InputError(f"unknown age group {value!r}, expected one of "
                         + ", ".join(_BY_VALUE)) from None


@dataclass(frozen=True)
class BlogRecord:
    author_id: str
    age: int
    text: str
    gender: Optional[str] = None
    topic: Optional[str] = None
    sign: Optional[str] = None
    date: Optional[str] = None


@dataclass(frozen=True)
class RejectedRow:
    line_number: int
    reason: str


@dataclass
class ReadResult:
    records: list
    rejects: list
    rows_read: int


# field name -> default CSV column header, override by passing a mapping with
# the same keys (subset allowed, but age and text are required)
DEFAULT_COLUMNS = {
    "author_id": "id",
    "gender": "gender",
    "age": "age",
    "topic": "topic",
    "sign": "sign",
    "date": "date",
    "text": "text",
}


def read_corpus_csv(path, columns: Optional[dict] = None) -> ReadResult:
    """Read a blog corpus CSV (RFC-4180, UTF-8, header row required).

    Rows whose age fails to parse as a non-negative integer are not dropped:
    they land in the reject report with the physical line number and a reason.
    Every data row is accounted for: rows_read == len(records) + len(rejects).
    """
    colmap = dict(DEFAULT_COLUMNS) if columns is None else dict(columns)
    for required in ("age", "text"):
        if required not in colmap:
            raise InputError(f"column mapping must include {required!r}")
    p = Path(path)
    if not p.is_file():
        raise InputError(f"corpus file not found: {p}")
    records: list[BlogRecord] = []
    rejects: list[RejectedRow] = []
    rows_read = 0
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader, None)
        except csv.Error as exc:
            raise InputError(f"{p}: malformed CSV at line 1: {exc}") from None
        if header is None:
            raise InputError(f"{p}: empty file, header row required")
        positions = {}
        missing = []
        for field_name, col in colmap.items():
            if col in header:
                positions[field_name] = header.index(col)
            else:
                missing.append(col)
        if missing:
            raise InputError(f"{p}: missing mapped columns: " + ", ".join(missing))
        width_needed = max(positions.values()) + 1
        try:
            for row in reader:
                if not row:
                    continue
                rows_read += 1
                line = reader.line_num
                if len(row) < width_needed:
                    rejects.append(RejectedRow(line, "missing fields"))
                    continue
                raw_age = row[positions["age"]].strip()
                try:
                    age = int(raw_age)
                except ValueError:
                    rejects.append(RejectedRow(line, f"unparseable age {raw_age!r}"))
                    continue
                if age < 0:
                    rejects.append(RejectedRow(line, f"negative age {age}"))
                    continue

                def get(field_name):
                    pos = positions.get(field_name)
                    return row[pos] if pos is not None else None

                records.append(BlogRecord(
                    author_id=(get("author_id") or "").strip(),
                    age=age,
                    text=(get("text") or "").strip(),
                    gender=get("gender"),
                    topic=get("topic"),
                    sign=get("sign"),
                    date=get("date"),
                ))
        except csv.Error as exc:
            raise InputError(f"{p}: malformed CSV at line {reader.line_num}: {exc}") from None
    return ReadResult(records=records, rejects=rejects, rows_read=rows_read)


def write_reject_report(rejects, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["line_number", "reason"])
        for rej in rejects:
            writer.writerow([rej.line_number, rej.reason])


def derive_age_group(age: int) -> Optional[AgeGroup]:
    """Map an age in years to its group; boundary ages belong to the stated band.

    Returns None below 18 (filtered upstream). Negative ages are a caller bug,
    not a filterable condition, and raise.
    """
    if age < 0:
        raise InputError(f"age must be non-negative, got {age}")
    if age < 18:
        return None
    if age <= 34:
        return AgeGroup.YOUNG
    if age <= 41:
        return AgeGroup.MIDDLE_AGED
    return AgeGroup.OLD


@dataclass
class BalancedCorpus:
    records: list  # (BlogRecord, AgeGroup) pairs, ordered by group then shuffle order
    seed: int
    per_group_count: int


def balance(records, seed: int) -> BalancedCorpus:
    """Downsample every group to the smallest group size.

    Selection is a seeded uniform shuffle within each group followed by a
    prefix take, so changing the seed can change membership but never counts.
    Groups are processed and emitted in GROUP_ORDER.
    """
    buckets = {g: [] for g in GROUP_ORDER}
    for rec, grp in records:
        buckets[grp].append((rec, grp))
    empty = [g.value for g in GROUP_ORDER if not buckets[g]]
    if empty:
        raise InputError("cannot balance, empty groups: " + ", ".join(empty))
    per = min(len(b) for b in buckets.values())
    rng = np.random.default_rng(seed)
    out = []
    for g in GROUP_ORDER:
        order = rng.permutation(len(buckets[g]))
        out.extend(buckets[g][i] for i in order[:per])
    return BalancedCorpus(records=out, seed=int(seed), per_group_count=per)


BALANCED_HEADER = ("doc_id", "author_id", "gender", "age", "age_group",
                   "topic", "sign", "date", "text")


@dataclass(frozen=True)
class BalancedRow:
    """One row of a balanced-corpus file: a BlogRecord plus its assigned ids."""

    doc_id: str
    group: AgeGroup
    record: BlogRecord


def write_balanced_csv(balanced: BalancedCorpus, path) -> None:
    """Persist a balanced corpus with stable synthetic document ids d00000..."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BALANCED_HEADER)
        for i, (rec, grp) in enumerate(balanced.records):
            writer.writerow([f"d{i:05d}", rec.author_id, rec.gender or "",
                             rec.age, grp.value, rec.topic or "",
                             rec.sign or "", rec.date or "", rec.text])


def read_balanced_csv(path) -> list:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"balanced corpus file not found: {p}")
    rows: list[BalancedRow] = []
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        header = next(reader, None)
        if header is None or tuple(header) != BALANCED_HEADER:
            raise InputError(f"{p}: expected header {','.join(BALANCED_HEADER)}")
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != len(BALANCED_HEADER):
                    raise InputError(f"{p}: line {reader.line_num}: "
                                     f"expected {len(BALANCED_HEADER)} fields, got {len(row)}")
                doc_id, author_id, gender, age, group, topic, sign, date, text = row
                try:
                    age_int = int(age)
                except ValueError:
                    raise InputError(f"{p}: line {reader.line_num}: "
                                     f"unparseable age {age!r}") from None
                rows.append(BalancedRow(
                    doc_id=doc_id, group=group_from_value(group),
                    record=BlogRecord(author_id=author_id, age=age_int, text=text,
                                      gender=gender or None, topic=topic or None,
                                      sign=sign or None, date=date or None)))
        except csv.Error as exc:
            raise InputError(f"{p}: malformed CSV at line {reader.line_num}: {exc}") from None
    return rows

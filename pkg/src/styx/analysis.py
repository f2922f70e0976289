"""Group-level aggregation and comparison reports over feature vectors."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import GROUP_ORDER, AgeGroup
from .errors import InputError
from .features import METRIC_IDS


@dataclass
class MetricStats:
    mean: Optional[float]
    variance: Optional[float]  # sample variance (n-1); None when fewer than 2 values
    non_null_count: int


@dataclass
class GroupSummary:
    group: AgeGroup
    doc_count: int
    stats: dict  # metric id -> MetricStats


def aggregate(pairs, metric_ids=METRIC_IDS) -> list:
    """Per-group mean and sample variance over non-null metric values.

    pairs: iterable of (FeatureVector, AgeGroup). Sums use math.fsum, so the
    result does not depend on input order. Groups come back in GROUP_ORDER,
    only those present in the input.
    """
    by_group: dict[AgeGroup, list] = {}
    for fv, group in pairs:
        by_group.setdefault(group, []).append(fv)
    out = []
    for group in GROUP_ORDER:
        if group not in by_group:
            continue
        fvs = by_group[group]
        stats = {}
        for m in metric_ids:
            vals = [fv.values[m] for fv in fvs if fv.values.get(m) is not None]
            c = len(vals)
            if c == 0:
                stats[m] = MetricStats(None, None, 0)
                continue
            mean = math.fsum(vals) / c
            var = math.fsum((v - mean) ** 2 for v in vals) / (c - 1) if c >= 2 else None
            stats[m] = MetricStats(mean, var, c)
        out.append(GroupSummary(group=group, doc_count=len(fvs), stats=stats))
    return out


@dataclass
class ComparisonCell:
    corpus: str
    group: AgeGroup
    mean: Optional[float]
    normalized: Optional[float]


@dataclass
class ComparisonRow:
    metric: str
    cells: list


@dataclass
class ComparisonTable:
    corpus_labels: tuple
    groups: tuple
    rows: list


def compare(a, b, metrics=None, label_a: str = "A", label_b: str = "B") -> ComparisonTable:
    """Six-column comparison of two corpora: one row per metric, cells ordered
    (A x groups, B x groups), each row min-max normalized over its non-null
    means. A constant row normalizes to 0.5 everywhere."""
    groups_a = tuple(s.group for s in a)
    groups_b = tuple(s.group for s in b)
    if groups_a != groups_b:
        raise InputError(
            f"corpora do not share the same group set: {label_a} has "
            f"{[g.value for g in groups_a]}, {label_b} has {[g.value for g in groups_b]}")
    wanted = tuple(metrics) if metrics is not None else METRIC_IDS
    sides = [(label_a, a), (label_b, b)]
    rows = []
    for m in wanted:
        cells = []
        for label, summaries in sides:
            for summary in summaries:
                if m not in summary.stats:
                    raise InputError(f"metric {m!r} missing from corpus {label}")
                cells.append(ComparisonCell(corpus=label, group=summary.group,
                                            mean=summary.stats[m].mean, normalized=None))
        present = [c.mean for c in cells if c.mean is not None]
        if present:
            lo, hi = min(present), max(present)
            spread = hi - lo
            for c in cells:
                if c.mean is None:
                    continue
                c.normalized = 0.5 if spread == 0 else (c.mean - lo) / spread
        rows.append(ComparisonRow(metric=m, cells=cells))
    return ComparisonTable(corpus_labels=(label_a, label_b), groups=groups_a, rows=rows)


def comparison_to_csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    head = ["metric"]
    head += [f"{c.corpus}_{c.group.value}_mean" for c in table.rows[0].cells] if table.rows else []
    head += [f"{c.corpus}_{c.group.value}_norm" for c in table.rows[0].cells] if table.rows else []
    writer.writerow(head)
    for row in table.rows:
        rec = [row.metric]
        rec += ["" if c.mean is None else repr(c.mean) for c in row.cells]
        rec += ["" if c.normalized is None else repr(c.normalized) for c in row.cells]
        writer.writerow(rec)
    return buf.getvalue()


def comparison_to_json(table: ComparisonTable) -> str:
    obj = {
        "corpora": list(table.corpus_labels),
        "groups": [g.value for g in table.groups],
        "rows": [
            {"metric": row.metric,
             "cells": [{"corpus": c.corpus, "group": c.group.value,
                        "mean": c.mean, "normalized": c.normalized}
                       for c in row.cells]}
            for row in table.rows
        ],
    }
    return json.dumps(obj, separators=(",", ":")) + "\n"


def comparison_to_svg(table: ComparisonTable) -> str:
    """Grayscale heatmap of the normalized cells; darker means higher."""
    cell_w, cell_h = 84, 20
    label_w, header_h = 190, 42
    n_cols = len(table.groups) * 2
    width = label_w + n_cols * cell_w + 10
    height = header_h + len(table.rows) * cell_h + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if table.rows:
        for j, cell in enumerate(table.rows[0].cells):
            x = label_w + j * cell_w + cell_w / 2
            parts.append(f'<text x="{x}" y="{header_h - 26}" text-anchor="middle">{cell.corpus}</text>')
            parts.append(f'<text x="{x}" y="{header_h - 12}" text-anchor="middle">{cell.group.label}</text>')
    for i, row in enumerate(table.rows):
        y = header_h + i * cell_h
        parts.append(f'<text x="{label_w - 6}" y="{y + 14}" text-anchor="end">{row.metric}</text>')
        for j, cell in enumerate(row.cells):
            x = label_w + j * cell_w
            if cell.normalized is None:
                parts.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                             f'fill="white" stroke="#999"/>')
                parts.append(f'<text x="{x + cell_w / 2}" y="{y + 14}" '
                             f'text-anchor="middle" fill="#999">n/a</text>')
                continue
            shade = round(235 - 195 * cell.normalized)
            fill = f"rgb({shade},{shade},{shade})"
            text_fill = "white" if cell.normalized > 0.55 else "black"
            parts.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                         f'fill="{fill}" stroke="#999"/>')
            parts.append(f'<text x="{x + cell_w / 2}" y="{y + 14}" text-anchor="middle" '
                         f'fill="{text_fill}">{cell.normalized:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


@dataclass
class VarianceRow:
    group: AgeGroup
    mean: Optional[float]
    sd: Optional[float]
    ratio: Optional[float]  # sd / mean; None when undefined
    flagged: bool           # fewer than 2 non-null values


def variance_report(summaries, metric: str) -> list:
    """Per-group spread of one metric: mean, standard deviation, and the
    sd/mean ratio. Groups with fewer than two non-null values are flagged."""
    rows = []
    for summary in summaries:
        if metric not in summary.stats:
            raise InputError(f"metric {metric!r} missing from group {summary.group.value}")
        st = summary.stats[metric]
        if st.variance is None:
            rows.append(VarianceRow(summary.group, st.mean, None, None, True))
            continue
        sd = math.sqrt(st.variance)
        ratio = sd / st.mean if st.mean not in (None, 0) else None
        rows.append(VarianceRow(summary.group, st.mean, sd, ratio, False))
    return rows


def variance_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "mean", "sd", "sd_over_mean", "flagged"])
    for r in rows:
        writer.writerow([
            r.group.value,
            "" if r.mean is None else repr(r.mean),
            "" if r.sd is None else repr(r.sd),
            "" if r.ratio is None else repr(r.ratio),
            "true" if r.flagged else "false",
        ])
    return buf.getvalue()


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset:
    text = resources.files("styx.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines()
                     if w.strip() and not w.startswith("#"))


def load_stopwords(path) -> frozenset:
    return frozenset(w.strip().lower() for w in Path(path).read_text(encoding="utf-8").splitlines()
                     if w.strip() and not w.startswith("#"))


def token_frequency(doc_group_pairs, top_k: int, stopwords: Optional[frozenset] = None) -> dict:
    """Top-k lowercase word forms per group after stopword removal.

    Ranking is by count descending, then form ascending, so ties are stable.
    """
    if top_k < 1:
        raise InputError(f"top_k must be at least 1, got {top_k}")
    stop = default_stopwords() if stopwords is None else stopwords
    counts: dict[AgeGroup, dict] = {}
    for doc, group in doc_group_pairs:
        bucket = counts.setdefault(group, {})
        for sent in doc.sentences:
            for t in sent.tokens:
                if t.upos == "PUNCT":
                    continue
                form = t.form.lower()
                if form in stop:
                    continue
                bucket[form] = bucket.get(form, 0) + 1
    out = {}
    for group in GROUP_ORDER:
        if group not in counts:
            continue
        ranked = sorted(counts[group].items(), key=lambda kv: (-kv[1], kv[0]))
        out[group] = ranked[:top_k]
    return out

"""The syntactic metric battery.

Every metric is computed over one parsed document. Rates use the document's
word-token count (tokens whose UPOS is not PUNCT) as denominator; any metric
whose denominator is zero is null, never zero or NaN. Tree metrics
(clauses_per_sentence, mean_yngve_depth) are null for documents produced by
the fallback tagger (has_trees=False).

METRIC_IDS fixes the catalog: output columns, vector order, and the catalog
hash embedded in model files all derive from it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .corpus import AgeGroup, group_from_value
from .errors import InputError
from .parsing import ParsedDocument, Sentence

METRIC_IDS: tuple = (
    "noun_rate",
    "verb_rate",
    "adjective_rate",
    "adverb_rate",
    "pronoun_rate",
    "conjunction_rate",
    "demonstrative_rate",
    "possessive_rate",
    "noun_verb_ratio",
    "noun_ratio",
    "pronoun_noun_ratio",
    "closed_class_rate",
    "open_class_rate",
    "content_density",
    "idea_density",
    "prop_inflected_verbs",
    "prop_auxiliary_verbs",
    "prop_gerund_verbs",
    "prop_participles",
    "clauses_per_sentence",
    "mean_yngve_depth",
    "discourse_marker_rate",
    "self_reference_rate",
    "unique_words_rate",
)

NOUN_UPOS = frozenset({"NOUN", "PROPN"})
CONJUNCTION_UPOS = frozenset({"CCONJ", "SCONJ"})
OPEN_CLASS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV", "INTJ"})
CLOSED_CLASS = frozenset({"PRON", "DET", "ADP", "AUX", "CCONJ", "SCONJ", "PART", "NUM"})
IDEA_UPOS = frozenset({"VERB", "ADJ", "ADV", "ADP", "CCONJ", "SCONJ"})
DEMONSTRATIVE_LEMMAS = frozenset({"this", "that", "these", "those"})
POSSESSIVE_XPOS = frozenset({"PRP$", "POS", "WP$"})
INFLECTED_XPOS = frozenset({"VBD", "VBZ", "VBG", "VBN"})
CLAUSE_DEPRELS = frozenset({"root", "csubj", "ccomp", "xcomp", "advcl", "acl"})
SELF_REFERENCE_FORMS = frozenset({"i", "me", "my", "mine", "myself"})


def catalog_hash(metric_ids: Iterable = METRIC_IDS) -> str:
    """Stable digest of a metric-id list; model files embed it so that
    prediction inputs can be checked for column drift."""
    return hashlib.sha256("\n".join(metric_ids).encode("utf-8")).hexdigest()


@dataclass
class FeatureVector:
    doc_id: str
    word_token_count: int
    values: dict  # metric id -> float or None, complete over METRIC_IDS


def _iter_tokens(doc: ParsedDocument):
    for sent in doc.sentences:
        yield from sent.tokens


def _word_tokens(doc: ParsedDocument) -> list:
    return [t for t in _iter_tokens(doc) if t.upos != "PUNCT"]


def word_token_count(doc: ParsedDocument) -> int:
    return len(_word_tokens(doc))


# ---------------------------------------------------------------------------
# POS rates and ratios
# ---------------------------------------------------------------------------

def compute_pos_rates(doc: ParsedDocument) -> dict:
    """Per-word-token rates of the eight POS-derived categories.

    demonstrative: lemma in {this, that, these, those} with UPOS DET or PRON.
    possessive: XPOS in {PRP$, POS, WP$} or the Poss=Yes feature.
    """
    words = _word_tokens(doc)
    n = len(words)
    keys = ("noun_rate", "verb_rate", "adjective_rate", "adverb_rate",
            "pronoun_rate", "conjunction_rate", "demonstrative_rate", "possessive_rate")
    if n == 0:
        return {k: None for k in keys}
    noun = verb = adj = adv = pron = conj = dem = poss = 0
    for t in words:
        u = t.upos
        if u in NOUN_UPOS:
            noun += 1
        elif u == "VERB":
            verb += 1
        elif u == "ADJ":
            adj += 1
        elif u == "ADV":
            adv += 1
        elif u == "PRON":
            pron += 1
        if u in CONJUNCTION_UPOS:
            conj += 1
        if t.lemma.lower() in DEMONSTRATIVE_LEMMAS and u in ("DET", "PRON"):
            dem += 1
        if (t.xpos in POSSESSIVE_XPOS) or t.feats.get("Poss") == "Yes":
            poss += 1
    return {
        "noun_rate": noun / n,
        "verb_rate": verb / n,
        "adjective_rate": adj / n,
        "adverb_rate": adv / n,
        "pronoun_rate": pron / n,
        "conjunction_rate": conj / n,
        "demonstrative_rate": dem / n,
        "possessive_rate": poss / n,
    }


def compute_ratios(doc: ParsedDocument) -> dict:
    """noun/verb, noun/(noun+verb), pronoun/noun; null on zero denominators."""
    nouns = verbs = prons = 0
    for t in _word_tokens(doc):
        if t.upos in NOUN_UPOS:
            nouns += 1
        elif t.upos == "VERB":
            verbs += 1
        elif t.upos == "PRON":
            prons += 1
    return {
        "noun_verb_ratio": nouns / verbs if verbs else None,
        "noun_ratio": nouns / (nouns + verbs) if nouns + verbs else None,
        "pronoun_noun_ratio": prons / nouns if nouns else None,
    }


def compute_class_rates(doc: ParsedDocument) -> dict:
    """Open-class and closed-class rates plus their count ratio.

    SYM and X belong to neither class, so the two rates plus the SYM/X rate
    partition the word tokens exactly.
    """
    words = _word_tokens(doc)
    n = len(words)
    if n == 0:
        return {"closed_class_rate": None, "open_class_rate": None, "content_density": None}
    open_c = sum(1 for t in words if t.upos in OPEN_CLASS)
    closed_c = sum(1 for t in words if t.upos in CLOSED_CLASS)
    return {
        "closed_class_rate": closed_c / n,
        "open_class_rate": open_c / n,
        "content_density": open_c / closed_c if closed_c else None,
    }


def compute_idea_density(doc: ParsedDocument) -> dict:
    """Share of proposition-bearing tokens: VERB, ADJ, ADV, ADP, CCONJ, SCONJ."""
    words = _word_tokens(doc)
    n = len(words)
    if n == 0:
        return {"idea_density": None}
    ideas = sum(1 for t in words if t.upos in IDEA_UPOS)
    return {"idea_density": ideas / n}


def compute_verb_morphology(doc: ParsedDocument) -> dict:
    """Proportions over the VERB+AUX tokens of the document.

    XPOS drives the classification (inflected = VBD/VBZ/VBG/VBN, gerund = VBG,
    participle = VBN). Tokens without XPOS fall back to morphological features:
    VerbForm=Ger, VerbForm=Part, and Tense=Past or third-person-singular
    Tense=Pres for the inflected bucket.
    """
    verbs = [t for t in _iter_tokens(doc) if t.upos in ("VERB", "AUX")]
    m = len(verbs)
    if m == 0:
        return {"prop_inflected_verbs": None, "prop_auxiliary_verbs": None,
                "prop_gerund_verbs": None, "prop_participles": None}
    infl = aux = ger = part = 0
    for t in verbs:
        if t.upos == "AUX":
            aux += 1
        if t.xpos is not None:
            if t.xpos in INFLECTED_XPOS:
                infl += 1
            if t.xpos == "VBG":
                ger += 1
            if t.xpos == "VBN":
                part += 1
        else:
            vf = t.feats.get("VerbForm")
            if vf == "Ger":
                ger += 1
            elif vf == "Part":
                part += 1
            tense = t.feats.get("Tense")
            if tense == "Past" or (tense == "Pres"
                                   and t.feats.get("Number") == "Sing"
                                   and t.feats.get("Person") == "3"):
                infl += 1
    return {
        "prop_inflected_verbs": infl / m,
        "prop_auxiliary_verbs": aux / m,
        "prop_gerund_verbs": ger / m,
        "prop_participles": part / m,
    }


# ---------------------------------------------------------------------------
# tree metrics
# ---------------------------------------------------------------------------

def _deprel_base(deprel: str) -> str:
    return deprel.split(":", 1)[0] if deprel else deprel


def compute_clauses(doc: ParsedDocument) -> dict:
    """Mean clauses per sentence, where a clause is a token whose deprel base
    is one of root, csubj, ccomp, xcomp, advcl, acl."""
    if not doc.has_trees or not doc.sentences:
        return {"clauses_per_sentence": None}
    per_sentence = [
        sum(1 for t in sent.tokens if _deprel_base(t.deprel) in CLAUSE_DEPRELS)
        for sent in doc.sentences
    ]
    return {"clauses_per_sentence": sum(per_sentence) / len(per_sentence)}


def yngve_sentence_score(sentence: Sentence) -> Optional[float]:
    """Mean per-word branching load of the dependency tree projected to an
    ordered tree.

    Projection: punctuation tokens (deprel punct) are removed first; a head
    with dependents becomes an internal node whose ordered children are the
    projections of the preceding dependents, a leaf for the head word itself,
    then the projections of the following dependents. Children are numbered
    right to left starting at 0; a word's load is the sum of the numbers on
    the path from the root to its leaf. Returns None when nothing remains.
    """
    toks = sentence.tokens
    by_index = {t.index: t for t in toks}
    root_tok = next((t for t in toks if t.head == 0), None)
    keep = [t for t in toks
            if _deprel_base(t.deprel) != "punct" or t is root_tok]
    if not keep:
        return None
    kept = {t.index for t in keep}

    def effective_head(t):
        # reattach through removed punctuation tokens
        h = t.head
        while h != 0 and h not in kept:
            h = by_index[h].head
        return h

    children: dict[int, list[int]] = {}
    root = None
    for t in keep:
        h = effective_head(t)
        if h == 0:
            root = t.index
        else:
            children.setdefault(h, []).append(t.index)
    for deps in children.values():
        deps.sort()

    depths: dict[int, int] = {}

    def walk(head: int, acc: int) -> None:
        deps = children.get(head)
        if not deps:
            depths[head] = acc
            return
        items = [d for d in deps if d < head] + [head] + [d for d in deps if d > head]
        last = len(items) - 1
        for pos, item in enumerate(items):
            load = acc + (last - pos)
            if item == head:
                depths[item] = load
            elif children.get(item):
                walk(item, load)
            else:
                depths[item] = load

    walk(root, 0)
    return sum(depths.values()) / len(keep)


def compute_yngve(doc: ParsedDocument) -> dict:
    """Document score: mean over sentences of the per-sentence mean word load.
    Sentences left empty after punctuation removal are skipped."""
    if not doc.has_trees:
        return {"mean_yngve_depth": None}
    scores = [s for s in (yngve_sentence_score(sent) for sent in doc.sentences)
              if s is not None]
    if not scores:
        return {"mean_yngve_depth": None}
    return {"mean_yngve_depth": sum(scores) / len(scores)}


# ---------------------------------------------------------------------------
# lexical metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkerLexicon:
    singles: frozenset
    pairs: frozenset  # (first, second) word tuples


def parse_markers(text: str) -> MarkerLexicon:
    singles, pairs = set(), set()
    for raw in text.splitlines():
        line = raw.strip().lower()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            singles.add(parts[0])
        elif len(parts) == 2:
            pairs.add((parts[0], parts[1]))
        else:
            raise InputError(f"marker lexicon entries are one or two words, got {raw!r}")
    return MarkerLexicon(frozenset(singles), frozenset(pairs))


def load_markers(path) -> MarkerLexicon:
    return parse_markers(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_markers() -> MarkerLexicon:
    text = resources.files("styx.data").joinpath("discourse_markers.txt").read_text(encoding="utf-8")
    return parse_markers(text)


def compute_lexical(doc: ParsedDocument, markers: Optional[MarkerLexicon] = None) -> dict:
    """Discourse-marker rate, first-person self-reference rate, and the share
    of distinct lowercase forms among word tokens.

    Two-word markers are matched on adjacent word tokens within a sentence and
    consume both tokens, so neither can also match as a single marker.
    """
    lex = default_markers() if markers is None else markers
    words = _word_tokens(doc)
    n = len(words)
    if n == 0:
        return {"discourse_marker_rate": None, "self_reference_rate": None,
                "unique_words_rate": None}
    self_count = sum(1 for t in words if t.form.lower() in SELF_REFERENCE_FORMS)
    distinct = len({t.form.lower() for t in words})
    matches = 0
    for sent in doc.sentences:
        forms = [t.form.lower() for t in sent.tokens if t.upos != "PUNCT"]
        i = 0
        while i < len(forms):
            if i + 1 < len(forms) and (forms[i], forms[i + 1]) in lex.pairs:
                matches += 1
                i += 2
            elif forms[i] in lex.singles:
                matches += 1
                i += 1
            else:
                i += 1
    return {
        "discourse_marker_rate": matches / n,
        "self_reference_rate": self_count / n,
        "unique_words_rate": distinct / n,
    }


# ---------------------------------------------------------------------------
# composition and IO
# ---------------------------------------------------------------------------

def featurize(doc: ParsedDocument, markers: Optional[MarkerLexicon] = None) -> FeatureVector:
    """Compute the full catalog for one document, in METRIC_IDS order."""
    values = {}
    values.update(compute_pos_rates(doc))
    values.update(compute_ratios(doc))
    values.update(compute_class_rates(doc))
    values.update(compute_idea_density(doc))
    values.update(compute_verb_morphology(doc))
    values.update(compute_clauses(doc))
    values.update(compute_yngve(doc))
    values.update(compute_lexical(doc, markers))
    ordered = {m: values[m] for m in METRIC_IDS}
    return FeatureVector(doc_id=doc.doc_id,
                         word_token_count=word_token_count(doc),
                         values=ordered)


FEATURE_HEADER_FIXED = ("doc_id", "age_group", "word_token_count")


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_features_csv(rows, path) -> None:
    """rows: iterable of (FeatureVector, AgeGroup or None). Nulls are empty fields."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_HEADER_FIXED) + list(METRIC_IDS))
        for fv, group in rows:
            writer.writerow(
                [fv.doc_id, group.value if group is not None else "", fv.word_token_count]
                + [_fmt(fv.values[m]) for m in METRIC_IDS])


def write_features_jsonl(rows, path) -> None:
    """Same table as the CSV, one JSON object per document; nulls are JSON null."""
    with open(path, "w", encoding="utf-8") as fh:
        for fv, group in rows:
            obj = {"doc_id": fv.doc_id,
                   "age_group": group.value if group is not None else None,
                   "word_token_count": fv.word_token_count}
            obj.update({m: fv.values[m] for m in METRIC_IDS})
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


@dataclass
class FeatureTable:
    doc_ids: list
    groups: list          # AgeGroup or None per row
    word_counts: list
    metric_ids: tuple
    matrix: np.ndarray    # floats, NaN for null

    def feature_vectors(self) -> list:
        out = []
        for i, doc_id in enumerate(self.doc_ids):
            values = {}
            for j, m in enumerate(self.metric_ids):
                v = self.matrix[i, j]
                values[m] = None if math.isnan(v) else float(v)
            out.append(FeatureVector(doc_id=doc_id,
                                     word_token_count=self.word_counts[i],
                                     values=values))
        return out


def read_features_csv(path) -> FeatureTable:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"feature file not found: {p}")
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header[:3]) != FEATURE_HEADER_FIXED:
            raise InputError(f"{p}: expected header starting with "
                             + ",".join(FEATURE_HEADER_FIXED))
        metric_ids = tuple(header[3:])
        doc_ids, groups, counts, data = [], [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{p}: row width {len(row)} does not match header")
            doc_ids.append(row[0])
            groups.append(group_from_value(row[1]) if row[1] else None)
            counts.append(int(row[2]))
            data.append([float(v) if v else float("nan") for v in row[3:]])
    matrix = np.array(data, dtype=float) if data else np.empty((0, len(metric_ids)))
    return FeatureTable(doc_ids=doc_ids, groups=groups, word_counts=counts,
                        metric_ids=metric_ids, matrix=matrix)

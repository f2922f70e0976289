"""Token, sentence, and document structures with CoNLL-U IO and a fallback tagger.

Tree-dependent metrics need documents read from CoNLL-U (has_trees=True). The
rule-based fallback tagger supports POS-rate metrics only: it leaves every head
at 0 and sets has_trees=False, so downstream tree metrics come out null.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import InputError

UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})


class ConlluError(InputError):
    def __init__(self, message: str, sentence_ordinal: Optional[int] = None):
        if sentence_ordinal is not None:
            message = f"sentence {sentence_ordinal}: {message}"
        super().__init__(message)
        self.sentence_ordinal = sentence_ordinal


@dataclass(slots=True)
class Token:
    index: int           # 1-based position in the sentence
    form: str
    lemma: str
    upos: str            # member of UPOS_TAGS
    xpos: Optional[str]  # language-specific tag, e.g. Penn VBD; may be absent
    feats: dict          # morphological features, key -> value
    head: int            # 0 means syntactic root
    deprel: str


@dataclass(slots=True)
class Sentence:
    tokens: list


@dataclass(slots=True)
class ParsedDocument:
    doc_id: str
    sentences: list
    has_trees: bool


def validate_tree(sentence: Sentence):
    """Check the single-root/acyclic/connected invariant.

    Returns (ok, problems) where problems enumerates every violation found.
    """
    toks = sentence.tokens
    n = len(toks)
    problems = []
    if [t.index for t in toks] != list(range(1, n + 1)):
        problems.append("token indices are not contiguous from 1")
    for t in toks:
        if t.head == t.index:
            problems.append(f"token {t.index}: head references itself")
        elif t.head < 0 or t.head > n:
            problems.append(f"token {t.index}: head {t.head} out of range")
    roots = [t.index for t in toks if t.head == 0]
    if n and not roots:
        problems.append("no root token (head 0)")
    elif len(roots) > 1:
        problems.append("multiple roots: tokens " + ", ".join(map(str, roots)))
    if not problems and n:
        children: dict[int, list[int]] = {}
        for t in toks:
            children.setdefault(t.head, []).append(t.index)
        seen = set()
        stack = [0]
        while stack:
            h = stack.pop()
            for c in children.get(h, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        unreachable = sorted({t.index for t in toks} - seen)
        if unreachable:
            problems.append("cyclic heads, tokens not reachable from root: "
                            + ", ".join(map(str, unreachable)))
    return (not problems, problems)


_MWT_ID = re.compile(r"\d+-\d+")
_EMPTY_ID = re.compile(r"\d+\.\d+")


def _build_sentence(rows, ordinal: int) -> Optional[Sentence]:
    tokens = []
    for line in rows:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, got {len(cols)}", ordinal)
        tid, form, lemma, upos, xpos, feats, head, deprel = cols[:8]
        if _MWT_ID.fullmatch(tid) or _EMPTY_ID.fullmatch(tid):
            # multiword-token ranges and empty nodes carry no syntactic word
            continue
        try:
            index = int(tid)
        except ValueError:
            raise ConlluError(f"bad token id {tid!r}", ordinal) from None
        try:
            head_i = int(head)
        except ValueError:
            raise ConlluError(f"non-integer head {head!r} for token {tid}", ordinal) from None
        if upos not in UPOS_TAGS:
            raise ConlluError(f"unknown UPOS tag {upos!r} for token {tid}", ordinal)
        feats_d = {}
        if feats not in ("_", ""):
            for item in feats.split("|"):
                if "=" in item:
                    key, val = item.split("=", 1)
                    feats_d[key] = val
        tokens.append(Token(
            index=index,
            form=form,
            lemma="" if lemma == "_" else lemma,
            upos=upos,
            xpos=None if xpos == "_" else xpos,
            feats=feats_d,
            head=head_i,
            deprel="" if deprel == "_" else deprel,
        ))
    if not tokens:
        return None
    seen = set()
    for t in tokens:
        if t.index in seen:
            raise ConlluError(f"duplicate token index {t.index}", ordinal)
        seen.add(t.index)
    sent = Sentence(tokens=tokens)
    ok, problems = validate_tree(sent)
    if not ok:
        raise ConlluError("; ".join(problems), ordinal)
    return sent


def read_conllu(source) -> list:
    """Parse CoNLL-U text into ParsedDocuments (has_trees=True).

    Sentences are blank-line separated; `# newdoc id = X` comments open
    documents. Without any newdoc header the whole input is one document.
    Malformed trees raise ConlluError naming the sentence ordinal.
    """
    if hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        text = Path(source).read_text(encoding="utf-8")

    docs: list[ParsedDocument] = []
    cur_id: Optional[str] = None
    cur_sentences: list[Sentence] = []
    pending: list[str] = []
    ordinal = 0  # sentence counter across the whole stream, for error messages

    def flush_sentence():
        nonlocal ordinal
        if not pending:
            return
        ordinal += 1
        sent = _build_sentence(pending, ordinal)
        pending.clear()
        if sent is not None:
            cur_sentences.append(sent)

    def flush_doc():
        nonlocal cur_id, cur_sentences
        if cur_id is None and not cur_sentences:
            return
        doc_id = cur_id if cur_id is not None else f"doc{len(docs)}"
        docs.append(ParsedDocument(doc_id=doc_id, sentences=cur_sentences, has_trees=True))
        cur_id = None
        cur_sentences = []

    for raw in text.splitlines():
        line = raw.rstrip("\r")
        if not line.strip():
            flush_sentence()
            continue
        if line.startswith("#"):
            meta = line[1:].strip()
            if meta == "newdoc" or meta.startswith("newdoc "):
                flush_sentence()
                flush_doc()
                cur_id = meta.split("=", 1)[1].strip() if "=" in meta else f"doc{len(docs)}"
            continue
        pending.append(line)
    flush_sentence()
    flush_doc()
    return docs


def write_conllu(docs, dest) -> None:
    """Serialize documents back to CoNLL-U; inverse of read_conllu on
    (form, lemma, upos, xpos, feats, head, deprel)."""

    def fmt(t: Token) -> str:
        feats = "|".join(f"{k}={v}" for k, v in
                         sorted(t.feats.items(), key=lambda kv: kv[0].lower())) or "_"
        return "\t".join([
            str(t.index), t.form or "_", t.lemma or "_", t.upos, t.xpos or "_",
            feats, str(t.head), t.deprel or "_", "_", "_",
        ])

    lines = []
    for doc in docs:
        lines.append(f"# newdoc id = {doc.doc_id}")
        for sent in doc.sentences:
            lines.extend(fmt(t) for t in sent.tokens)
            lines.append("")
    payload = "\n".join(lines) + ("\n" if lines else "")
    if hasattr(dest, "write"):
        dest.write(payload)
    else:
        Path(dest).write_text(payload, encoding="utf-8")


# ---------------------------------------------------------------------------
# fallback tagger
# ---------------------------------------------------------------------------

_TERMINALS = ".!?"
_PUNCT_CHARS = set(string.punctuation)
_NUM_RE = re.compile(r"\d+(?:[.,]\d+)*")


def parse_lexicon(text: str) -> dict:
    """Parse a closed-class lexicon: one lowercase `form<TAB>UPOS` pair per line."""
    lex = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError(f"lexicon line {line_no}: expected form<TAB>UPOS, got {raw!r}")
        form, tag = parts
        if tag not in UPOS_TAGS:
            raise InputError(f"lexicon line {line_no}: unknown UPOS tag {tag!r}")
        lex[form.lower()] = tag
    return lex


def load_lexicon(path) -> dict:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_lexicon() -> dict:
    text = resources.files("styx.data").joinpath("tagger_lexicon.tsv").read_text(encoding="utf-8")
    return parse_lexicon(text)


def _split_sentences(text: str) -> list:
    # terminal punctuation splits only outside double quotes; runs like "?!"
    # stay attached to the sentence they close
    chunks = []
    buf: list[str] = []
    in_quote = False
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        buf.append(ch)
        if ch == '"':
            in_quote = not in_quote
        elif ch in _TERMINALS and not in_quote:
            j = i + 1
            while j < n and text[j] in _TERMINALS:
                buf.append(text[j])
                j += 1
            chunks.append("".join(buf))
            buf = []
            i = j
            continue
        i += 1
    tail = "".join(buf)
    if tail.strip():
        chunks.append(tail)
    return chunks


def _tokenize(chunk: str) -> list:
    out = []
    for blob in chunk.split():
        lead = []
        while blob and blob[0] in _PUNCT_CHARS:
            lead.append(blob[0])
            blob = blob[1:]
        trail = []
        while blob and blob[-1] in _PUNCT_CHARS:
            trail.append(blob[-1])
            blob = blob[:-1]
        out.extend(lead)
        if blob:
            out.append(blob)
        out.extend(reversed(trail))
    return out


def _assign_tag(form: str, prev_tag: Optional[str], lex: dict) -> str:
    if all(ch in _PUNCT_CHARS for ch in form):
        return "PUNCT"
    if _NUM_RE.fullmatch(form):
        return "NUM"
    low = form.lower()
    if low in lex:
        return lex[low]
    if low.endswith("ly"):
        return "ADV"
    if low.endswith(("ness", "tion", "ment")):
        return "NOUN"
    if low.endswith(("ous", "ful", "able")):
        return "ADJ"
    if low.endswith(("ing", "ed")) and prev_tag == "AUX":
        return "VERB"
    if prev_tag == "PRON":
        # bare subject pronoun is usually followed by its verb
        return "VERB"
    return "NOUN"


def fallback_tag(text: str, lexicon: Optional[dict] = None, doc_id: str = "") -> ParsedDocument:
    """Crude sentence splitter and POS tagger for corpora without parses.

    Tags come from the closed-class lexicon, then suffix heuristics, then a
    NOUN default. Heads stay 0 and deprels empty: the result carries no trees.
    """
    lex = default_lexicon() if lexicon is None else lexicon
    sentences = []
    for chunk in _split_sentences(text):
        forms = _tokenize(chunk)
        if not forms:
            continue
        tokens = []
        prev_tag: Optional[str] = None
        for i, form in enumerate(forms, start=1):
            tag = _assign_tag(form, prev_tag, lex)
            tokens.append(Token(index=i, form=form, lemma=form.lower(), upos=tag,
                                xpos=None, feats={}, head=0, deprel=""))
            if tag != "PUNCT":
                prev_tag = tag
        sentences.append(Sentence(tokens=tokens))
    return ParsedDocument(doc_id=doc_id, sentences=sentences, has_trees=False)

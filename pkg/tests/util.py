"""Shared test helpers: document builders, an independent Yngve oracle, and
exhaustive dependency-tree enumeration.

The oracle here deliberately takes a different route from the library: it
materializes the projected tree as an explicit nested structure and sums path
labels with a stack walk, instead of accumulating during recursion. Keeping
the two routes independent is what makes agreement between them evidence.
"""

from __future__ import annotations

from itertools import product

from styx.parsing import ParsedDocument, Sentence, Token


def make_token(index, form, upos, head=0, deprel="", lemma=None, xpos=None,
               feats=None):
    return Token(index=index, form=form,
                 lemma=form.lower() if lemma is None else lemma,
                 upos=upos, xpos=xpos, feats=feats or {}, head=head,
                 deprel=deprel)


def make_sentence(specs) -> Sentence:
    """specs: list of (form, upos) or (form, upos, head, deprel) tuples."""
    tokens = []
    for i, spec in enumerate(specs, start=1):
        if len(spec) == 2:
            form, upos = spec
            tokens.append(make_token(i, form, upos))
        else:
            form, upos, head, deprel = spec
            tokens.append(make_token(i, form, upos, head=head, deprel=deprel))
    return Sentence(tokens=tokens)


def make_doc(sentences, doc_id="t", has_trees=False) -> ParsedDocument:
    return ParsedDocument(doc_id=doc_id,
                          sentences=[make_sentence(s) for s in sentences],
                          has_trees=has_trees)


def _kept_tokens(sentence: Sentence):
    """Replicate the punct-removal contract: drop punct-deprel tokens, keep
    the root regardless, and re-home children of removed tokens onto the
    nearest kept ancestor."""
    by_index = {t.index: t for t in sentence.tokens}
    kept = {t.index for t in sentence.tokens
            if t.deprel != "punct" or t.head == 0}
    heads = {}
    for idx in kept:
        h = by_index[idx].head
        while h != 0 and h not in kept:
            h = by_index[h].head
        heads[idx] = h
    return kept, heads


def oracle_yngve(sentence: Sentence):
    """Mean Yngve depth by explicit projected-tree materialization."""
    kept, heads = _kept_tokens(sentence)
    if not kept:
        return None
    children: dict[int, list] = {}
    root = None
    for idx in sorted(kept):
        h = heads[idx]
        if h == 0:
            root = idx
        else:
            children.setdefault(h, []).append(idx)

    def build(head):
        deps = children.get(head, [])
        if not deps:
            return ("leaf", head)
        ordered = [build(d) for d in deps if d < head] + [("leaf", head)] \
            + [build(d) for d in deps if d > head]
        return ("node", ordered)

    depths = {}
    stack = [(build(root), 0)]
    while stack:
        (kind, payload), acc = stack.pop()
        if kind == "leaf":
            depths[payload] = acc
            continue
        n = len(payload)
        for pos, child in enumerate(payload):
            stack.append((child, acc + (n - 1 - pos)))
    return sum(depths.values()) / len(depths)


def is_valid_tree(heads) -> bool:
    """heads: tuple of head indices for tokens 1..n. Valid iff exactly one
    root, no self-reference, and every token reaches the root."""
    n = len(heads)
    if sum(1 for h in heads if h == 0) != 1:
        return False
    for i, h in enumerate(heads, start=1):
        if h == i or not 0 <= h <= n:
            return False
    for i in range(1, n + 1):
        seen = set()
        node = i
        while node != 0:
            if node in seen:
                return False
            seen.add(node)
            node = heads[node - 1]
    return True


def enumerate_head_vectors(n: int):
    """All valid dependency head assignments for a sentence of n tokens."""
    for heads in product(range(n + 1), repeat=n):
        if is_valid_tree(heads):
            yield heads


def sentence_from_heads(heads) -> Sentence:
    return Sentence(tokens=[
        make_token(i, f"w{i}", "NOUN", head=h,
                   deprel="root" if h == 0 else "dep")
        for i, h in enumerate(heads, start=1)])

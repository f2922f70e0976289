import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from styx.features import yngve_sentence_score
from styx.parsing import read_conllu
from util import (
    enumerate_head_vectors, is_valid_tree, make_sentence, oracle_yngve,
    sentence_from_heads,
)


def test_single_word_scores_zero():
    assert yngve_sentence_score(make_sentence([("hi", "INTJ", 0, "root")])) == 0.0


def test_right_spine_by_hand():
    # a heads b heads c, all rightward. Each projection is [head-leaf, dep]
    # numbered 1,0: a and b sit left of their dependent and carry 1 each,
    # while the innermost dependent c rides only 0-numbered edges.
    sent = make_sentence([("a", "VERB", 0, "root"), ("b", "NOUN", 1, "obj"),
                          ("c", "NOUN", 2, "nmod")])
    assert yngve_sentence_score(sent) == pytest.approx(2 / 3)


def test_left_chain_by_hand():
    # c is root, b depends on c, a depends on b: projection of c is
    # [proj(b), c] with numbers 1,0; proj(b) is [a, b] with numbers 1,0.
    # depths: a = 1+1 = 2, b = 1+0 = 1, c = 0. mean = 1.
    sent = make_sentence([("a", "NOUN", 2, "dep"), ("b", "NOUN", 3, "dep"),
                          ("c", "VERB", 0, "root")])
    assert yngve_sentence_score(sent) == 1.0


def test_flat_attachment_by_hand():
    # root with two preceding dependents: [a, b, r] numbered 2,1,0
    sent = make_sentence([("a", "NOUN", 3, "dep"), ("b", "NOUN", 3, "dep"),
                          ("r", "VERB", 0, "root")])
    assert yngve_sentence_score(sent) == pytest.approx(1.0)
    assert oracle_yngve(sent) == pytest.approx(1.0)


def test_punct_is_removed_before_projection():
    # with the comma dropped this is [a, b] numbered 1,0 over two words;
    # were the comma kept the same shape would average over three words
    sent = make_sentence([("a", "VERB", 0, "root"), (",", "PUNCT", 1, "punct"),
                          ("b", "NOUN", 1, "obj")])
    assert yngve_sentence_score(sent) == pytest.approx(0.5)


def test_orphan_promotion_through_removed_punct():
    # b hangs off a punct token; after removal it reattaches to the root
    sent = make_sentence([("-", "PUNCT", 2, "punct"), ("r", "VERB", 0, "root"),
                          ("b", "NOUN", 1, "dep")])
    got = yngve_sentence_score(sent)
    assert got == pytest.approx(0.5)
    assert oracle_yngve(sent) == pytest.approx(got)


def test_punct_root_is_kept():
    sent = make_sentence([("!", "PUNCT", 0, "root")])
    assert yngve_sentence_score(sent) == 0.0


def test_fixture_sentences_match_oracle(fixtures_dir):
    for name in ("unit_examples.conllu", "blog_examples.conllu"):
        for doc in read_conllu(fixtures_dir / name):
            for sent in doc.sentences:
                got = yngve_sentence_score(sent)
                want = oracle_yngve(sent)
                assert got == pytest.approx(want, abs=1e-15), doc.doc_id


def test_enumeration_counts_are_cayley():
    # rooted labeled trees on n nodes: n^(n-1)
    for n in range(1, 5):
        assert sum(1 for _ in enumerate_head_vectors(n)) == n ** (n - 1)


def test_exhaustive_small_trees_match_oracle():
    for n in range(1, 5):
        for heads in enumerate_head_vectors(n):
            sent = sentence_from_heads(heads)
            assert yngve_sentence_score(sent) == pytest.approx(
                oracle_yngve(sent), abs=1e-15), heads


def _random_tree(n: int, seed: int):
    """Uniform-ish random rooted tree: attach each node, in a seeded random
    order, to a random already-attached node (or make it the root)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n) + 1
    heads = [0] * n
    placed = [int(order[0])]
    for node in order[1:]:
        heads[int(node) - 1] = int(placed[rng.integers(len(placed))])
        placed.append(int(node))
    return tuple(heads)


@settings(max_examples=150)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**31 - 1))
def test_random_trees_match_oracle(n, seed):
    heads = _random_tree(n, seed)
    assert is_valid_tree(heads)
    sent = sentence_from_heads(heads)
    assert yngve_sentence_score(sent) == pytest.approx(oracle_yngve(sent),
                                                       abs=1e-15)

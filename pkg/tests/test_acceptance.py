"""End-to-end acceptance gate.

One test per shipping criterion, each printable as a single pass/fail line
under `pytest -v`. Tolerances are stated inline next to each assertion.
"""

import json
import resource
import shutil
import socket
import time

import numpy as np
import pytest

from goldens import EXPECTED
from styx import features
from styx.cli import main as cli_main
from styx.features import METRIC_IDS, featurize, yngve_sentence_score
from styx.mlkit import fit_stacked, predict_stacked
from styx.mlkit.linear import SoftmaxRegression, one_hot
from styx.mlkit.mlp import MlpClassifier, MlpConfig
from styx.mlkit.pca import fit_pca
from styx.parsing import read_conllu
from test_learners import _grad_check
from test_scaler_pca import _eig_oracle
from util import enumerate_head_vectors, make_doc, make_sentence, \
    oracle_yngve, sentence_from_heads


def _run_cli(*argv):
    return cli_main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# criterion 1: every hand-computed metric golden matches exactly
# ---------------------------------------------------------------------------

def test_metric_goldens_exact(fixtures_dir):
    docs = {}
    for name in ("unit_examples.conllu", "blog_examples.conllu"):
        for doc in read_conllu(fixtures_dir / name):
            docs[doc.doc_id] = doc
    compared, mismatches = 0, []
    for doc_id, (wtc, values) in EXPECTED.items():
        fv = featurize(docs[doc_id])
        assert fv.word_token_count == wtc, doc_id
        for metric, expected in values.items():
            compared += 1
            want = None if expected is None else float(expected)
            if fv.values[metric] != want:    # tolerance: exact
                mismatches.append((doc_id, metric, want, fv.values[metric]))
    assert compared == 120
    assert not mismatches, mismatches


# ---------------------------------------------------------------------------
# criterion 2: Yngve scoring agrees with an independent oracle on every
# valid dependency tree up to six tokens
# ---------------------------------------------------------------------------

def test_yngve_exhaustive_against_oracle():
    total, mismatches = 0, 0
    for n in range(1, 7):
        seen = 0
        for heads in enumerate_head_vectors(n):
            seen += 1
            sent = sentence_from_heads(heads)
            got = yngve_sentence_score(sent)
            want = oracle_yngve(sent)
            if got != pytest.approx(want, abs=1e-12):
                mismatches += 1
        assert seen == n ** (n - 1)    # labeled rooted trees on n nodes
        total += seen
    assert total == 8477
    assert mismatches == 0


# ---------------------------------------------------------------------------
# criterion 3: syntactic complexity orders the example age groups as the
# source corpus does (old above young)
# ---------------------------------------------------------------------------

def test_complexity_trend_across_groups(fixtures_dir):
    docs = {d.doc_id: d for d in read_conllu(fixtures_dir / "blog_examples.conllu")}
    young = featurize(docs["d00000"]).values
    old = featurize(docs["d00002"]).values
    assert old["mean_yngve_depth"] > young["mean_yngve_depth"]
    assert old["clauses_per_sentence"] > young["clauses_per_sentence"]


# ---------------------------------------------------------------------------
# criterion 4: PCA satisfies its algebraic contracts on random inputs
# ---------------------------------------------------------------------------

def test_pca_contracts_across_random_inputs():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(50, 8)) @ rng.normal(size=(8, 8))
        model = fit_pca(X, k=5)
        C = model.components_
        assert np.allclose(C @ C.T, np.eye(5), atol=1e-8)         # orthonormal
        oc, ow = _eig_oracle(X, 5)
        assert np.allclose(C, oc, atol=1e-8)                      # matches eigh route
        assert np.allclose(model.eigenvalues_, ow, atol=1e-8)
        full = fit_pca(X, k=8)
        Xc = X - X.mean(axis=0)
        recon = full.transform(X) @ full.components_
        assert np.max(np.abs(recon - Xc)) < 1e-8                  # lossless at full rank


# ---------------------------------------------------------------------------
# criterion 5: analytic gradients match central finite differences
# ---------------------------------------------------------------------------

def test_gradients_match_finite_differences():
    rng = np.random.default_rng(123)
    worst = 0.0
    for trial in range(10):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(2, 5))
        n = int(rng.integers(4, 9))
        X = rng.normal(size=(n, d))
        Y = one_hot(rng.integers(0, k, size=n), k)
        rel = _grad_check(SoftmaxRegression(n_classes=k), d * k + k, X, Y,
                          seed=trial)
        worst = max(worst, rel)
        h = int(rng.integers(3, 9))
        mlp = MlpClassifier(n_classes=k, config=MlpConfig(hidden=h))
        rel = _grad_check(mlp, d * h + h + h * k + k, X, Y, seed=trial + 50)
        worst = max(worst, rel)
    assert worst < 1e-4    # tolerance: relative error 1e-4


# ---------------------------------------------------------------------------
# criterion 6: the stacked model holds up on held-out data and is not worse
# than its best base learner
# ---------------------------------------------------------------------------

def test_stacked_holdout_accuracy(blob_split):
    X_train, y_train, X_test, y_test = blob_split
    model = fit_stacked(X_train, y_train, seed=42)
    pred, _ = predict_stacked(model, X_test)
    stacked_acc = float(np.mean(pred == y_test))
    Z = model.pca.transform(model.scaler.transform(X_test))
    base_accs = {kind: float(np.mean(m.predict_proba(Z).argmax(axis=1) == y_test))
                 for kind, m in model.base_models}
    assert stacked_acc >= 0.90
    assert stacked_acc >= max(base_accs.values()) - 0.02


# ---------------------------------------------------------------------------
# criterion 7: the whole CLI pipeline is byte-deterministic for a fixed seed
# ---------------------------------------------------------------------------

_TOPICS = ("Student", "Arts", "Religion", "Banking")
_OPENERS = ("Today I think that", "Well, you know, maybe", "Actually we saw",
            "So then she said that", "I really love how", "They never knew",
            "My friend wrote that", "Honestly it seems")


def _synthetic_corpus_csv(path):
    """24 authors, 8 per band, with varied little texts."""
    rows = ["id,gender,age,topic,sign,date,text"]
    ages = {"young": (19, 33), "mid": (35, 41), "old": (44, 70)}
    i = 0
    for band, (lo, hi) in ages.items():
        for j in range(8):
            age = lo + (j * 3) % (hi - lo + 1)
            opener = _OPENERS[(i + j) % len(_OPENERS)]
            text = (f"{opener} the {_TOPICS[j % 4].lower()} story number {j} "
                    f"was quite {'long' if j % 2 else 'short'} and I "
                    f"{'really ' * (j % 3)}enjoyed it. It made me think.")
            rows.append(f'a{i:03d},female,{age},{_TOPICS[j % 4]},Leo,01-Jan-2004,"{text}"')
            i += 1
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def _run_pipeline(corpus_csv, out):
    assert _run_cli("ingest", "--corpus-csv", corpus_csv, "--seed", "42",
                    "--out-dir", out) == 0
    assert _run_cli("featurize", "--balanced-csv", out / "balanced.csv",
                    "--fallback-tagger", "--seed", "42", "--out-dir", out) == 0
    assert _run_cli("train", "--features-csv", out / "features.csv",
                    "--seed", "42", "--forest-n-trees", "25",
                    "--gbt-n-rounds", "40", "--mlp-epochs", "80",
                    "--out-dir", out) == 0
    assert _run_cli("evaluate", "--features-csv", out / "features.csv",
                    "--model-file", out / "model.styx", "--seed", "42",
                    "--forest-n-trees", "25", "--gbt-n-rounds", "40",
                    "--mlp-epochs", "80", "--out-dir", out) == 0


def test_pipeline_is_byte_deterministic(tmp_path, capsys):
    corpus_csv = tmp_path / "corpus.csv"
    _synthetic_corpus_csv(corpus_csv)
    artifacts = ("run_config.json", "balanced.csv", "rejects.csv",
                 "features.csv", "features.jsonl", "model.styx", "eval.json")
    out = tmp_path / "run"
    snapshots = []
    for _ in range(2):
        if out.exists():
            shutil.rmtree(out)
        _run_pipeline(corpus_csv, out)
        snapshots.append({name: (out / name).read_bytes() for name in artifacts})
    first, second = snapshots
    for name in artifacts:
        assert first[name] == second[name], f"{name} differs between runs"


# ---------------------------------------------------------------------------
# criterion 8: generation replays recorded responses with networking disabled
# ---------------------------------------------------------------------------

def test_replay_generation_offline(tmp_path, fixtures_dir, monkeypatch):
    def no_network(*args, **kwargs):
        raise AssertionError("test attempted to open a socket")

    monkeypatch.setattr(socket, "socket", no_network)
    monkeypatch.setattr(socket, "create_connection", no_network)
    out = tmp_path / "out"
    rc = _run_cli("generate", "--replay",
                  "--replay-log", fixtures_dir / "replay_log.jsonl",
                  "--gen-topics", "Student,Arts,Religion",
                  "--gen-n", "6", "--seed", "42", "--out-dir", out)
    assert rc == 0
    lines = (out / "generated.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 7 and lines[0] == "id,gender,age,topic,sign,date,text"


# ---------------------------------------------------------------------------
# criterion 9: featurization streams a 50k-document corpus inside the
# stated time and memory budget
# ---------------------------------------------------------------------------

_SMOKE_VOCAB = (("time", "NOUN"), ("saw", "VERB"), ("big", "ADJ"), ("very", "ADV"),
                ("she", "PRON"), ("the", "DET"), ("of", "ADP"), ("was", "AUX"),
                ("and", "CCONJ"), ("story", "NOUN"))


def _smoke_doc(doc_idx):
    sentences = []
    for s in range(3):
        base = doc_idx * 3 + s
        specs = []
        for t in range(10):
            form, upos = _SMOKE_VOCAB[(base + t) % len(_SMOKE_VOCAB)]
            if t % 9 == 8:
                form, upos = ".", "PUNCT"
            head = 0 if t == 0 else ((base * 2654435761 + t) % t) + 1
            deprel = "root" if head == 0 else ("punct" if upos == "PUNCT" else "dep")
            specs.append((f"{form}{(base + t) % 7}" if upos not in ("PUNCT",)
                          else form, upos, head, deprel))
        sentences.append(specs)
    return make_doc(sentences, doc_id=f"s{doc_idx}", has_trees=True)


def test_featurize_scales_to_fifty_thousand_docs():
    n_docs = 50_000
    t0 = time.monotonic()
    checksum = 0.0
    for i in range(n_docs):
        fv = featurize(_smoke_doc(i))
        v = fv.values["mean_yngve_depth"]
        assert v is not None and np.isfinite(v)
        checksum += v
    elapsed = time.monotonic() - t0
    peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    assert np.isfinite(checksum)
    assert elapsed < 300.0, f"50k docs took {elapsed:.1f}s"    # budget: 5 minutes
    assert peak_kb < 2 * 1024 * 1024, f"peak RSS {peak_kb} kB"  # budget: 2 GB

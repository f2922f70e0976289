"""Command-line pipeline: ingest -> featurize -> compare/train/evaluate/predict,
plus corpus generation and token-frequency tables.

One flat config namespace serves every subcommand. Precedence: built-in
defaults < JSON config file (--config) < command-line flags. The merged
effective config is echoed to <out_dir>/run_config.json before any work, so
every artifact directory records exactly how it was produced.

Exit codes: 0 success, 2 input or validation error, 3 external-service error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, corpus, features, llm_gen, mlkit, parsing
from .corpus import GROUP_ORDER
from .errors import InputError, TransportError


@dataclass
class RunConfig:
    # global
    seed: int = 42
    out_dir: str = "out"
    # paths
    corpus_csv: Optional[str] = None
    balanced_csv: Optional[str] = None
    conllu: Optional[str] = None
    features_csv: Optional[str] = None
    features_b_csv: Optional[str] = None
    model_file: Optional[str] = None
    cache_dir: Optional[str] = None
    replay_log: Optional[str] = None
    marker_lexicon: Optional[str] = None
    stopword_file: Optional[str] = None
    # ingest column mapping
    column_id: str = "id"
    column_gender: str = "gender"
    column_age: str = "age"
    column_topic: str = "topic"
    column_sign: str = "sign"
    column_date: str = "date"
    column_text: str = "text"
    # featurize
    fallback_tagger: bool = False
    strict: bool = False
    # compare
    metrics: Optional[str] = None
    label_a: str = "A"
    label_b: str = "B"
    svg: bool = False
    variance_metric: Optional[str] = None
    # train
    folds: int = 5
    pca_components: int = 5
    logreg_l2: float = 1e-4
    logreg_max_iter: int = 500
    logreg_tol: float = 1e-6
    logreg_learning_rate: float = 0.1
    forest_n_trees: int = 100
    forest_max_depth: int = 12
    gbt_n_rounds: int = 100
    gbt_max_depth: int = 3
    gbt_learning_rate: float = 0.1
    svm_l2: float = 1e-3
    svm_epochs: int = 200
    svm_learning_rate: float = 0.05
    mlp_hidden: int = 32
    mlp_epochs: int = 200
    mlp_learning_rate: float = 0.01
    mlp_momentum: float = 0.9
    # generate
    gen_n: int = 1000
    gen_model: str = "gpt-4"
    gen_temperature: float = 1.0
    gen_max_words: int = 20
    gen_max_age: int = 80
    gen_topics: Optional[str] = None
    base_url: str = llm_gen.DEFAULT_BASE_URL
    max_in_flight: int = 4
    replay: bool = False
    # freq
    top_k: int = 10


_HELP = {
    "seed": "master random seed (default 42)",
    "out_dir": "directory for artifacts and the echoed run_config.json",
    "corpus_csv": "raw blog corpus CSV (ingest input, generate topic source)",
    "balanced_csv": "balanced corpus CSV from ingest (featurize/freq input)",
    "conllu": "CoNLL-U file with parses matched to corpus doc ids",
    "features_csv": "features CSV (train/evaluate/predict input, compare side A)",
    "features_b_csv": "second features CSV (compare side B)",
    "model_file": "model container path (train output, evaluate/predict input)",
    "cache_dir": "response cache directory for generate",
    "replay_log": "JSONL of recorded responses for offline generate",
    "marker_lexicon": "discourse-marker list overriding the shipped one",
    "stopword_file": "stopword list overriding the shipped one",
    "fallback_tagger": "tag raw text with the bundled lexicon tagger (tree metrics null)",
    "strict": "fail instead of skipping corpus docs missing from the CoNLL-U file",
    "metrics": "comma-separated metric subset for compare",
    "label_a": "display label for compare side A",
    "label_b": "display label for compare side B",
    "svg": "also emit comparison.svg",
    "variance_metric": "metric for per-group mean/sd/ratio reports in compare",
    "folds": "stacking fold count",
    "pca_components": "PCA component count",
    "gen_n": "number of snippets to generate",
    "gen_topics": "comma-separated topic list (default: topics seen in the corpus file)",
    "gen_max_age": "upper bound for sampled ages in the oldest band",
    "base_url": "chat-completion endpoint base URL",
    "max_in_flight": "max concurrent live requests",
    "replay": "serve responses from --replay-log instead of the network",
    "top_k": "tokens per group in the frequency table",
}


def _expected_type(f) -> type:
    if f.default is None:
        return str
    if isinstance(f.default, bool):
        return bool
    return type(f.default)


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError(f"{p}: config must be a flat JSON object")
    spec = {f.name: f for f in fields(RunConfig)}
    unknown = sorted(set(obj) - set(spec))
    if unknown:
        raise InputError(f"{p}: unknown config keys: " + ", ".join(unknown))
    for key, value in obj.items():
        want = _expected_type(spec[key])
        if value is None and spec[key].default is None:
            continue
        if want is bool:
            if not isinstance(value, bool):
                raise InputError(f"{p}: key {key!r} must be a boolean")
        elif want is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"{p}: key {key!r} must be an integer")
        elif want is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InputError(f"{p}: key {key!r} must be a number")
            obj[key] = float(value)
        elif not isinstance(value, str):
            raise InputError(f"{p}: key {key!r} must be a string")
    return obj


def build_config(args: argparse.Namespace) -> RunConfig:
    data = {f.name: f.default for f in fields(RunConfig)}
    if getattr(args, "config", None):
        data.update(load_config_file(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    return RunConfig(**data)


def echo_config(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n"
    (out / "run_config.json").write_text(payload, encoding="utf-8")
    return out


def _require(cfg: RunConfig, name: str) -> str:
    value = getattr(cfg, name)
    if not value:
        flag = "--" + name.replace("_", "-")
        raise InputError(f"{flag} (config key {name!r}) is required for this command")
    return value


def cmd_ingest(cfg: RunConfig) -> int:
    path = _require(cfg, "corpus_csv")
    out = echo_config(cfg)
    colmap = {"author_id": cfg.column_id, "gender": cfg.column_gender,
              "age": cfg.column_age, "topic": cfg.column_topic,
              "sign": cfg.column_sign, "date": cfg.column_date,
              "text": cfg.column_text}
    result = corpus.read_corpus_csv(path, colmap)
    pairs = []
    underage = 0
    for rec in result.records:
        group = corpus.derive_age_group(rec.age)
        if group is None:
            underage += 1
        else:
            pairs.append((rec, group))
    balanced = corpus.balance(pairs, cfg.seed)
    corpus.write_balanced_csv(balanced, out / "balanced.csv")
    corpus.write_reject_report(result.rejects, out / "rejects.csv")
    for group in GROUP_ORDER:
        print(f"{group.value}: {balanced.per_group_count}")
    print(f"rows read: {result.rows_read}, rejected: {len(result.rejects)}, "
          f"filtered under-18: {underage}")
    return 0


def _load_parses(cfg: RunConfig, rows) -> tuple:
    """Pair balanced rows with parses; returns (list of (row, doc), missing ids)."""
    if cfg.conllu:
        by_id = {doc.doc_id: doc for doc in parsing.read_conllu(cfg.conllu)}
        paired, missing = [], []
        for row in rows:
            doc = by_id.get(row.doc_id)
            if doc is None:
                missing.append(row.doc_id)
            else:
                paired.append((row, doc))
        return paired, missing
    if cfg.fallback_tagger:
        return [(row, parsing.fallback_tag(row.record.text, doc_id=row.doc_id))
                for row in rows], []
    raise InputError("featurize needs --conllu or --fallback-tagger")


def cmd_featurize(cfg: RunConfig) -> int:
    path = _require(cfg, "balanced_csv")
    out = echo_config(cfg)
    rows = corpus.read_balanced_csv(path)
    paired, missing = _load_parses(cfg, rows)
    if missing:
        if cfg.strict:
            raise InputError(f"{len(missing)} docs have no parse: "
                             + " ".join(missing[:10]))
        print(f"warning: skipping {len(missing)} docs with no parse: "
              + " ".join(missing[:10]), file=sys.stderr)
    markers = features.load_markers(cfg.marker_lexicon) if cfg.marker_lexicon else None
    table = [(features.featurize(doc, markers=markers), row.group)
             for row, doc in paired]
    features.write_features_csv(table, out / "features.csv")
    features.write_features_jsonl(table, out / "features.jsonl")
    nulls = {m: 0 for m in features.METRIC_IDS}
    for fv, _ in table:
        for m in features.METRIC_IDS:
            if fv.values[m] is None:
                nulls[m] += 1
    print(f"featurized {len(table)} docs")
    print("null counts: " + " ".join(f"{m}={nulls[m]}" for m in features.METRIC_IDS))
    return 0


def _labeled_pairs(table, path):
    vectors = table.feature_vectors()
    pairs, dropped = [], 0
    for fv, group in zip(vectors, table.groups):
        if group is None:
            dropped += 1
        else:
            pairs.append((fv, group))
    if dropped:
        print(f"warning: {path}: {dropped} rows without age_group ignored",
              file=sys.stderr)
    return pairs


def cmd_compare(cfg: RunConfig) -> int:
    path_a = _require(cfg, "features_csv")
    path_b = _require(cfg, "features_b_csv")
    out = echo_config(cfg)
    table_a = features.read_features_csv(path_a)
    table_b = features.read_features_csv(path_b)
    summaries_a = analysis.aggregate(_labeled_pairs(table_a, path_a), table_a.metric_ids)
    summaries_b = analysis.aggregate(_labeled_pairs(table_b, path_b), table_b.metric_ids)
    wanted = ([m.strip() for m in cfg.metrics.split(",") if m.strip()]
              if cfg.metrics else None)
    comparison = analysis.compare(summaries_a, summaries_b, metrics=wanted,
                                  label_a=cfg.label_a, label_b=cfg.label_b)
    (out / "comparison.csv").write_text(analysis.comparison_to_csv(comparison),
                                        encoding="utf-8")
    (out / "comparison.json").write_text(analysis.comparison_to_json(comparison),
                                         encoding="utf-8")
    if cfg.svg:
        (out / "comparison.svg").write_text(analysis.comparison_to_svg(comparison),
                                            encoding="utf-8")
    if cfg.variance_metric:
        for label, summaries in ((cfg.label_a, summaries_a), (cfg.label_b, summaries_b)):
            rows = analysis.variance_report(summaries, cfg.variance_metric)
            (out / f"variance_{label}.csv").write_text(analysis.variance_to_csv(rows),
                                                       encoding="utf-8")
    print(f"compared {len(comparison.rows)} metrics across "
          f"{len(comparison.groups)} groups")
    return 0


def _features_and_labels(path):
    table = features.read_features_csv(path)
    y = []
    for i, group in enumerate(table.groups):
        if group is None:
            raise InputError(f"{path}: row {i + 1} ({table.doc_ids[i]}) has no "
                             "age_group label")
        y.append(GROUP_ORDER.index(group))
    return table, np.array(y, dtype=int)


def _check_catalog(model, table, path) -> None:
    got = features.catalog_hash(table.metric_ids)
    if tuple(table.metric_ids) != tuple(model.catalog) or got != model.catalog_hash:
        raise InputError(
            f"{path}: feature catalog does not match the model "
            f"(file hash {got[:12]}, model hash {model.catalog_hash[:12]}); "
            "the model expects columns: " + ",".join(model.catalog))


def _stack_config(cfg: RunConfig) -> mlkit.StackConfig:
    return mlkit.StackConfig(
        pca_components=cfg.pca_components,
        logreg=mlkit.LogregConfig(l2=cfg.logreg_l2, max_iter=cfg.logreg_max_iter,
                                  tol=cfg.logreg_tol,
                                  learning_rate=cfg.logreg_learning_rate),
        forest=mlkit.ForestConfig(n_trees=cfg.forest_n_trees,
                                  max_depth=cfg.forest_max_depth),
        gbt=mlkit.GbtConfig(n_rounds=cfg.gbt_n_rounds, max_depth=cfg.gbt_max_depth,
                            learning_rate=cfg.gbt_learning_rate),
        svm=mlkit.SvmConfig(l2=cfg.svm_l2, epochs=cfg.svm_epochs,
                            learning_rate=cfg.svm_learning_rate),
        mlp=mlkit.MlpConfig(hidden=cfg.mlp_hidden, epochs=cfg.mlp_epochs,
                            learning_rate=cfg.mlp_learning_rate,
                            momentum=cfg.mlp_momentum),
        meta=mlkit.GbtConfig(n_rounds=cfg.gbt_n_rounds, max_depth=cfg.gbt_max_depth,
                             learning_rate=cfg.gbt_learning_rate),
    )


def cmd_train(cfg: RunConfig) -> int:
    path = _require(cfg, "features_csv")
    out = echo_config(cfg)
    table, y = _features_and_labels(path)
    model = mlkit.fit_stacked(table.matrix, y, seed=cfg.seed, folds=cfg.folds,
                              config=_stack_config(cfg),
                              catalog=table.metric_ids,
                              catalog_hash=features.catalog_hash(table.metric_ids))
    model_path = Path(cfg.model_file) if cfg.model_file else out / "model.styx"
    mlkit.save_model(model, model_path)
    report = mlkit.evaluate(model, table.matrix, y)
    print(f"trained on {len(y)} docs, training accuracy "
          f"{report.accuracy:.4f}, model written to {model_path}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    feat_path = _require(cfg, "features_csv")
    model_path = _require(cfg, "model_file")
    out = echo_config(cfg)
    model = mlkit.load_model(model_path)
    table, y = _features_and_labels(feat_path)
    _check_catalog(model, table, feat_path)
    report = mlkit.evaluate(model, table.matrix, y)
    payload = report.to_json()
    (out / "eval.json").write_text(payload, encoding="utf-8")
    print(payload, end="")
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    feat_path = _require(cfg, "features_csv")
    model_path = _require(cfg, "model_file")
    out = echo_config(cfg)
    model = mlkit.load_model(model_path)
    table = features.read_features_csv(feat_path)
    _check_catalog(model, table, feat_path)
    pred, proba = mlkit.predict_stacked(model, table.matrix)
    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "predicted_group"]
                        + [f"p_{g.value}" for g in model.labels])
        for doc_id, klass, row in zip(table.doc_ids, pred, proba):
            writer.writerow([doc_id, model.labels[klass].value]
                            + [repr(float(v)) for v in row])
    print(f"predicted {len(table.doc_ids)} docs -> {out / 'predictions.csv'}")
    return 0


def _topics_for_generate(cfg: RunConfig) -> list:
    if cfg.gen_topics:
        topics = [t.strip() for t in cfg.gen_topics.split(",") if t.strip()]
        if not topics:
            raise InputError("gen_topics contained no usable topics")
        return topics
    seen: dict[str, None] = {}
    if cfg.balanced_csv:
        for row in corpus.read_balanced_csv(cfg.balanced_csv):
            if row.record.topic:
                seen.setdefault(row.record.topic, None)
    elif cfg.corpus_csv:
        result = corpus.read_corpus_csv(cfg.corpus_csv)
        for rec in result.records:
            if rec.topic:
                seen.setdefault(rec.topic, None)
    else:
        raise InputError("generate needs --gen-topics, or a corpus file "
                         "(--balanced-csv / --corpus-csv) to draw topics from")
    if not seen:
        raise InputError("no topics found in the corpus file")
    return list(seen)


def cmd_generate(cfg: RunConfig) -> int:
    out = echo_config(cfg)
    spec = llm_gen.GenSpec(n_samples=cfg.gen_n, topics=_topics_for_generate(cfg),
                           seed=cfg.seed, model=cfg.gen_model,
                           temperature=cfg.gen_temperature,
                           max_words=cfg.gen_max_words, max_age=cfg.gen_max_age)
    if cfg.replay:
        transport = llm_gen.ReplayTransport(_require(cfg, "replay_log"))
    else:
        transport = llm_gen.LiveTransport(base_url=cfg.base_url)
    cache = llm_gen.ResponseCache(cfg.cache_dir) if cfg.cache_dir else None
    records = llm_gen.generate(spec, transport, cache=cache,
                               max_in_flight=cfg.max_in_flight)
    llm_gen.export_gen_corpus(records, out / "generated.csv")
    hits = sum(1 for r in records if r.cached)
    print(f"generated {len(records)} snippets ({hits} from cache) "
          f"-> {out / 'generated.csv'}")
    return 0


def cmd_freq(cfg: RunConfig) -> int:
    path = _require(cfg, "balanced_csv")
    out = echo_config(cfg)
    rows = corpus.read_balanced_csv(path)
    docs = [(parsing.fallback_tag(row.record.text, doc_id=row.doc_id), row.group)
            for row in rows]
    stop = analysis.load_stopwords(cfg.stopword_file) if cfg.stopword_file else None
    ranked = analysis.token_frequency(docs, cfg.top_k, stopwords=stop)
    with open(out / "freq.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "rank", "form", "count"])
        for group in GROUP_ORDER:
            entries = ranked.get(group, [])
            if not entries:
                print(f"warning: group {group.value} has no countable tokens",
                      file=sys.stderr)
            for rank, (form, count) in enumerate(entries, start=1):
                writer.writerow([group.value, rank, form, count])
    print(f"frequency table for {len(rows)} docs -> {out / 'freq.csv'}")
    return 0


_COMMANDS = {
    "ingest": (cmd_ingest, "read a raw corpus CSV, derive and balance age groups"),
    "featurize": (cmd_featurize, "compute the metric battery for a balanced corpus"),
    "compare": (cmd_compare, "row-normalized comparison of two feature files"),
    "train": (cmd_train, "fit and save the stacked age-group model"),
    "evaluate": (cmd_evaluate, "score a saved model against labeled features"),
    "predict": (cmd_predict, "per-document group predictions from a saved model"),
    "generate": (cmd_generate, "produce a synthetic corpus via a chat endpoint"),
    "freq": (cmd_freq, "per-group top-k token frequency table"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON file of config keys (flags override it)")
    for f in fields(RunConfig):
        names = ["--" + f.name.replace("_", "-")]
        if f.name == "gen_n":
            names.append("--n")
        help_text = _HELP.get(f.name, "")
        if isinstance(f.default, bool):
            common.add_argument(*names, dest=f.name, action="store_true",
                                default=None, help=help_text)
        else:
            common.add_argument(*names, dest=f.name, type=_expected_type(f),
                                default=None, help=help_text, metavar="V")
    parser = argparse.ArgumentParser(
        prog="styx",
        description="corpus stylometry: syntactic metrics, group comparison, "
                    "age-group forecasting")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, blurb) in _COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=blurb, description=blurb)
        sp.set_defaults(func=func)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(cfg)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

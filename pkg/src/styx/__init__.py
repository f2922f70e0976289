"""Corpus stylometry toolkit: syntactic feature extraction over dependency
parses, age-group comparison reports, and a stacked-ensemble age forecaster."""

__version__ = "0.1.0"

from .corpus import (AgeGroup, BalancedCorpus, BlogRecord, GROUP_ORDER,
                     balance, derive_age_group, read_corpus_csv)
from .errors import InputError, StyxError, TransportError
from .features import METRIC_IDS, FeatureVector, catalog_hash, featurize
from .parsing import ParsedDocument, Sentence, Token, fallback_tag, read_conllu

__all__ = [
    "AgeGroup", "BalancedCorpus", "BlogRecord", "FeatureVector", "GROUP_ORDER",
    "InputError", "METRIC_IDS", "ParsedDocument", "Sentence", "StyxError",
    "Token", "TransportError", "balance", "catalog_hash", "derive_age_group",
    "fallback_tag", "featurize", "read_conllu", "read_corpus_csv",
    "__version__",
]

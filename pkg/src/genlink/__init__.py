"""Generative multilingual entity linking.

A mention is linked by generating one of its entity's identifiers
(a name plus a language code) under a trie constraint, then mapping the
identifier back to the entity.
"""

from .alias import AliasTable, build_alias_table
from .codec import RenderMode, decode_identifier, encode_identifier, parse, render, tokenize, detokenize
from .corpus import MentionInstance, align_hyperlinks, build_input, training_pairs
from .decoding import BeamConfig, Hypothesis, beam_search, exhaustive_rank
from .estimator import EntityLinker
from .evaluation import BucketSpec, EvalReport, accuracy, bucket_report
from .kb import EntityRecord, KnowledgeBase, ingest_kb
from .ranking import EntityScore, LinkConfig, link, rank_marginalized, rank_plain
from .scorer import ReferenceScorer, Scorer, ScorerInput, sequence_logprob, train_reference
from .trie import Trie, build, build_from_kb, deserialize, restrict, serialize

__version__ = "0.1.0"

__all__ = [
    "AliasTable",
    "BeamConfig",
    "BucketSpec",
    "EntityLinker",
    "EntityRecord",
    "EntityScore",
    "EvalReport",
    "Hypothesis",
    "KnowledgeBase",
    "LinkConfig",
    "MentionInstance",
    "ReferenceScorer",
    "RenderMode",
    "Scorer",
    "ScorerInput",
    "Trie",
    "accuracy",
    "align_hyperlinks",
    "beam_search",
    "bucket_report",
    "build",
    "build_alias_table",
    "build_from_kb",
    "build_input",
    "decode_identifier",
    "deserialize",
    "detokenize",
    "encode_identifier",
    "exhaustive_rank",
    "ingest_kb",
    "link",
    "parse",
    "rank_marginalized",
    "rank_plain",
    "render",
    "restrict",
    "sequence_logprob",
    "serialize",
    "tokenize",
    "train_reference",
    "training_pairs",
]

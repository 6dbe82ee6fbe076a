from .core import (
    BIN_WIDTH,
    LABELS,
    MAX_BINS,
    SPLITS,
    Corpus,
    Review,
    clean_text,
    dedup_exact,
    label_by_rating,
    length_bin,
    length_preserving_downsample,
    read_corpus,
    split_by_counts,
    split_by_ratio,
    write_corpus,
)
from .synth import SynthConfig, lexicons, synth_corpus, synth_raw_records, synth_reviews
from .vocab import EOS, PAD, RESERVED, START, UNK, Vocabulary, build_vocab, detokenize, tokenize

__all__ = [
    "BIN_WIDTH",
    "EOS",
    "LABELS",
    "MAX_BINS",
    "PAD",
    "RESERVED",
    "SPLITS",
    "START",
    "UNK",
    "Corpus",
    "Review",
    "SynthConfig",
    "Vocabulary",
    "build_vocab",
    "clean_text",
    "dedup_exact",
    "detokenize",
    "label_by_rating",
    "length_bin",
    "length_preserving_downsample",
    "lexicons",
    "read_corpus",
    "split_by_counts",
    "split_by_ratio",
    "synth_corpus",
    "synth_raw_records",
    "synth_reviews",
    "tokenize",
    "write_corpus",
]

"""Constituent-order analysis for inline-tagged functional-chunk corpora."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    ANCHORS,
    FC_LABELS,
    Chunk,
    Corpus,
    CorpusStats,
    Gap,
    Sentence,
    TagLabel,
    corpus_stats,
    fc_distribution,
    load_corpus,
    parse_corpus,
    parse_sentence,
    serialize_sentence,
)
from .positions import (  # noqa: E402
    chi_square_uniform,
    conditional_anchor_probability,
    relative_positions,
    welch_t_test,
)
from .sequences import fc_combination_counts, pattern_counts, tag_sequence, transition_matrix  # noqa: E402
from .special import regularized_gamma_q, regularized_incomplete_beta  # noqa: E402

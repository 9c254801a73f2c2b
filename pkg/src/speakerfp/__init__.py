"""Speaker identification for multiparty dialogue transcripts using class-level
fuzzy fingerprints over feature activations."""

from .corpus import (
    AssembledSample,
    Corpus,
    LabelMap,
    Scene,
    SplitSpec,
    Turn,
    adapt_bbt,
    adapt_friends,
    apply_labels,
    assemble_samples,
    corpus_stats,
    make_speaker_token,
    parse_canonical,
    split,
    write_canonical,
)
from .features import Vocabulary, build_vocab, read_activations, word_features, write_activations
from .fingerprint import (
    ClassificationResult,
    FingerprintLibrary,
    FuzzyFingerprint,
    GenericVerdict,
    accumulate,
    build_fingerprint,
    build_library,
    classify,
    classify_vector,
    detect_generic,
    load_library,
    pareto_membership,
    rank_units,
    sample_fingerprint,
    save_library,
    similarity,
)

__version__ = "0.1.0"

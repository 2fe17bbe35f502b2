"""Python bindings for the emlaw core: tokenizers, sequence metrics,
entropy estimators, regression, mock backends and the level-set pipeline."""

from ._emlaw import (
    Backend,
    Document,
    EmLawReport,
    EmlawError,
    EntropyEstimate,
    FilterDecision,
    GenerationConfig,
    LevelSetReport,
    MockEntropyNoise,
    MockKgram,
    MockPerfect,
    MockUniform,
    RegressionReport,
    SampleRecord,
    Tokenizer,
    __version__,
    analyze_emlaw,
    apply_filter,
    char_entropy,
    decide,
    entropy_of_counts,
    fit_ols,
    instance_entropy,
    lcs_length,
    levenshtein,
    longest_common_substring,
    mock_entropy_noise_corrupt,
    normalized_entropy,
    pearson,
    preset_tau_k,
    read_records,
    run_emlaw,
    sample_pairs,
    spearman,
    trivial_filter,
    write_records,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]

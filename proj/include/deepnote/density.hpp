#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/llm.hpp"
#include "deepnote/prompt.hpp"

namespace deepnote {

struct DensityRecord {
  std::size_t reference_tokens = 0;
  std::size_t evidence_tokens = 0;
  double density = 0.0;
};

struct DensityConfig {
  SamplingConfig sampling{0.1, 1.0, 1024};
  std::string model;
  /// Shortest verbatim run kept when clipping a span that is not itself a
  /// verbatim quote. Fully verbatim spans count at any length.
  std::size_t min_clip_run = 3;
};

/// Counts the reference tokens covered by `evidence`, one span per line.
///
/// Each span is tokenised with the retrieval tokenizer and decomposed greedily
/// into the longest runs that occur contiguously in the reference; every
/// covered reference position counts once, so the result never exceeds the
/// reference length. A line reading NONE contributes nothing.
DensityRecord measure_density(std::string_view reference, std::string_view evidence,
                              std::size_t min_clip_run = 3);

/// Asks the backend for verbatim evidence, then measures it.
DensityRecord knowledge_density(GenerationBackend& backend, const DensityConfig& config, std::string_view question,
                                std::string_view reference_text,
                                const TemplateSet& templates = TemplateSet::builtin());

}  // namespace deepnote

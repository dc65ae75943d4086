#include "deepnote/density.hpp"

#include <algorithm>
#include <unordered_map>

#include "deepnote/tokenizer.hpp"

namespace deepnote {
namespace {

struct Run {
  std::size_t ref_start = 0;
  std::size_t length = 0;
};

// Longest prefix of span[from..] that occurs contiguously in ref. Candidate
// start positions come from the first token's occurrence list.
Run longest_match(const std::vector<std::string>& ref,
                  const std::unordered_map<std::string, std::vector<std::size_t>>& positions,
                  const std::vector<std::string>& span, std::size_t from, const std::vector<char>& covered) {
  Run best;
  auto it = positions.find(span[from]);
  if (it == positions.end()) return best;
  for (std::size_t start : it->second) {
    std::size_t len = 0;
    while (from + len < span.size() && start + len < ref.size() && ref[start + len] == span[from + len]) ++len;
    // Prefer longer runs, then runs over not-yet-covered reference text.
    bool better = len > best.length;
    if (!better && len == best.length && len > 0 && covered[best.ref_start] && !covered[start]) better = true;
    if (better) best = Run{start, len};
  }
  return best;
}

}  // namespace

DensityRecord measure_density(std::string_view reference, std::string_view evidence, std::size_t min_clip_run) {
  DensityRecord out;
  const auto ref = tokenize(reference);
  out.reference_tokens = ref.size();
  if (ref.empty()) return out;

  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < ref.size(); ++i) positions[ref[i]].push_back(i);
  std::vector<char> covered(ref.size(), 0);

  std::size_t pos = 0;
  while (pos <= evidence.size()) {
    std::size_t nl = evidence.find('\n', pos);
    if (nl == std::string_view::npos) nl = evidence.size();
    const auto span = tokenize(evidence.substr(pos, nl - pos));
    pos = nl + 1;
    if (span.empty() || (span.size() == 1 && span.front() == "none")) continue;

    std::vector<Run> runs;
    for (std::size_t i = 0; i < span.size();) {
      Run r = longest_match(ref, positions, span, i, covered);
      if (r.length == 0) {
        ++i;
        continue;
      }
      runs.push_back(r);
      i += r.length;
    }
    const bool fully_verbatim = runs.size() == 1 && runs.front().length == span.size();
    for (const auto& r : runs) {
      if (!fully_verbatim && r.length < min_clip_run) continue;
      std::fill(covered.begin() + static_cast<std::ptrdiff_t>(r.ref_start),
                covered.begin() + static_cast<std::ptrdiff_t>(r.ref_start + r.length), 1);
    }
  }
  out.evidence_tokens = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
  out.density = static_cast<double>(out.evidence_tokens) / static_cast<double>(out.reference_tokens);
  return out;
}

DensityRecord knowledge_density(GenerationBackend& backend, const DensityConfig& config, std::string_view question,
                                std::string_view reference_text, const TemplateSet& templates) {
  if (reference_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ConfigError("reference text must be non-empty");
  }
  const auto prompt = templates.get(TemplateName::EvidenceExtract)
                          .render({{"query", std::string(question)}, {"refs", std::string(reference_text)}});
  const auto evidence = backend.complete(ChatRequest{prompt, config.sampling, config.model});
  return measure_density(reference_text, evidence, config.min_clip_run);
}

}  // namespace deepnote

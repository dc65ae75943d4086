#pragma once

#include <string>
#include <vector>

namespace deepnote {

struct ScoredPassage {
  std::string passage_id;
  double score = 0.0;
  int rank = 0;  // 1-based

  friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Result ordering used by every retriever: score descending, then id ascending.
inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.passage_id < b.passage_id;
}

/// Assigns consecutive ranks starting at 1 in list order.
inline void assign_ranks(std::vector<ScoredPassage>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = static_cast<int>(i) + 1;
}

}  // namespace deepnote

#pragma once

#include <string>
#include <vector>

#include "deepnote/corpus.hpp"
#include "deepnote/scored_passage.hpp"

namespace deepnote::testing {

// Scores every document from scratch by scanning raw token lists. Slow on
// purpose; shares nothing with the inverted index but the tokenizer.
std::vector<ScoredPassage> naive_bm25(const std::vector<Passage>& docs, const std::string& query, int k,
                                      double k1 = 1.2, double b = 0.75);

// Reproducible synthetic corpus over a small vocabulary. A few documents are
// exact duplicates of others so that score ties occur, and ids are not in
// insertion order.
std::vector<Passage> synthetic_docs(std::size_t n, unsigned seed);
std::vector<std::string> synthetic_queries(std::size_t n, unsigned seed);

struct OracleComparison {
  bool ok = true;
  std::string first_mismatch;
  double max_score_delta = 0.0;
  std::size_t ties_checked = 0;
};

OracleComparison compare_with_naive(std::size_t docs, std::size_t queries, int k, unsigned seed);

}  // namespace deepnote::testing

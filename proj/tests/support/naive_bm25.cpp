#include "naive_bm25.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "deepnote/bm25.hpp"
#include "deepnote/tokenizer.hpp"

namespace deepnote::testing {
namespace {

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "river", "castle", "king",  "queen",   "battle", "treaty", "poet",  "novel",  "city",   "harbor",
      "north", "south",  "war",   "empire",  "prince", "bridge", "tower", "church", "forest", "island",
      "gold",  "silver", "ship",  "captain", "canal",  "mill",   "bank",  "market", "school", "garden"};
  return words;
}

}  // namespace

std::vector<ScoredPassage> naive_bm25(const std::vector<Passage>& docs, const std::string& query, int k, double k1,
                                      double b) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(tokenize(d.title.empty() ? d.text : d.title + " " + d.text));
    total += static_cast<double>(toks.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;

  std::vector<ScoredPassage> all;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double score = 0.0;
    for (const auto& term : tokenize(query)) {
      double df = 0;
      for (const auto& t : toks) df += std::count(t.begin(), t.end(), term) > 0 ? 1 : 0;
      const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), term));
      if (tf == 0) continue;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(toks[i].size());
      score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
    }
    if (score > 0) all.push_back({docs[i].id, score, 0});
  }
  std::sort(all.begin(), all.end(), [](const ScoredPassage& x, const ScoredPassage& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.passage_id < y.passage_id;
  });
  if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i) + 1;
  return all;
}

std::vector<Passage> synthetic_docs(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  const auto& vocab = vocabulary();
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(3, 40);
  std::vector<Passage> docs;
  for (std::size_t i = 0; i < n; ++i) {
    // reversed numbering so insertion order disagrees with id order
    std::string num = std::to_string(n - i);
    Passage p{"doc" + std::string(num.size() < 4 ? 4 - num.size() : 0, '0') + num, "", ""};
    if (i % 17 == 5 && i > 0) {
      p.text = docs[i - 1].text;  // duplicate content forces exact score ties
    } else {
      const int l = len(rng);
      for (int w = 0; w < l; ++w) p.text += (w ? " " : "") + vocab[word(rng)];
    }
    docs.push_back(std::move(p));
  }
  return docs;
}

std::vector<std::string> synthetic_queries(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  const auto& vocab = vocabulary();
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(1, 5);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string q;
    const int l = len(rng);
    for (int w = 0; w < l; ++w) q += (w ? " " : "") + vocab[word(rng)];
    if (i % 7 == 3) q += " unknownword";
    out.push_back(q);
  }
  return out;
}

OracleComparison compare_with_naive(std::size_t doc_count, std::size_t query_count, int k, unsigned seed) {
  OracleComparison cmp;
  const auto docs = synthetic_docs(doc_count, seed);
  const Corpus corpus(docs);
  const auto index = Bm25Index::build(corpus);
  for (const auto& q : synthetic_queries(query_count, seed + 1)) {
    const auto got = index.search(q, k);
    const auto want = naive_bm25(docs, q, k);
    std::ostringstream where;
    where << "query \"" << q << "\": ";
    if (got.size() != want.size()) {
      cmp.ok = false;
      where << "size " << got.size() << " vs " << want.size();
    } else {
      for (std::size_t i = 0; i < got.size() && cmp.ok; ++i) {
        const double delta = std::abs(got[i].score - want[i].score);
        cmp.max_score_delta = std::max(cmp.max_score_delta, delta);
        if (got[i].passage_id != want[i].passage_id || got[i].rank != want[i].rank || delta >= 1e-9) {
          cmp.ok = false;
          where << "rank " << i + 1 << " got " << got[i].passage_id << " (" << got[i].score << ") want "
                << want[i].passage_id << " (" << want[i].score << ")";
        }
        if (i > 0 && got[i].score == got[i - 1].score) ++cmp.ties_checked;
      }
    }
    if (!cmp.ok) {
      cmp.first_mismatch = where.str();
      return cmp;
    }
  }
  return cmp;
}

}  // namespace deepnote::testing

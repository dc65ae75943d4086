#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepnote/corpus.hpp"
#include "deepnote/scored_passage.hpp"

namespace deepnote {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws ConfigError unless k1 >= 0 and 0 <= b <= 1.
  void validate() const;
};

struct Posting {
  std::uint32_t doc = 0;  // ordinal into the corpus
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Inverted index over "title text" with Lucene-style BM25 scoring.
///
/// Postings are sorted by document ordinal. Scoring is term-at-a-time into a
/// dense accumulator, so a search touches only documents containing at least
/// one query term. The index is immutable once built and may be searched from
/// any number of threads.
class Bm25Index {
 public:
  static Bm25Index build(const Corpus& corpus, Bm25Params params = {});

  /// Top-k by (score desc, passage id asc). Zero-score documents are never
  /// returned, so fewer than k results come back when fewer documents match.
  /// Each query token contributes once per occurrence.
  std::vector<ScoredPassage> search(std::string_view query, int k) const;

  const Bm25Params& params() const noexcept { return params_; }
  std::size_t doc_count() const noexcept { return doc_lengths_.size(); }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  std::size_t doc_length(std::size_t ordinal) const { return doc_lengths_.at(ordinal); }
  const std::string& passage_id(std::size_t ordinal) const { return id_map_.at(ordinal); }
  std::size_t term_count() const noexcept { return postings_.size(); }

  std::size_t doc_freq(std::string_view term) const;
  double idf(std::string_view term) const;
  /// nullptr when the term is not indexed.
  const std::vector<Posting>* postings(std::string_view term) const;

  /// Line-delimited persistence; see docs/formats.md.
  void save(std::ostream& out) const;
  static Bm25Index load(std::istream& in);

 private:
  Bm25Index() = default;
  void finalize();

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> id_map_;
  std::vector<double> length_norm_;  // k1 * (1 - b + b * dl / avgdl)
  double avg_doc_len_ = 0.0;
};

std::vector<ScoredPassage> bm25_search(const Bm25Index& index, std::string_view query, int k);

/// Corpus plus its BM25 index, as stored by `deepnote index`.
struct IndexBundle {
  Corpus corpus;
  Bm25Index index;
};

void save_index_bundle(const std::filesystem::path& path, const Corpus& corpus, const Bm25Index& index);
IndexBundle load_index_bundle(const std::filesystem::path& path);

}  // namespace deepnote

#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "deepnote/bm25.hpp"
#include "deepnote/corpus.hpp"
#include "deepnote/dense.hpp"
#include "deepnote/scored_passage.hpp"

namespace deepnote {

/// What the note engine needs from a retriever: ranked ids plus passage lookup.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<ScoredPassage> search(std::string_view query, int k) const = 0;
  virtual const Passage& passage(std::string_view id) const = 0;
};

class Bm25Retriever : public Retriever {
 public:
  Bm25Retriever(std::shared_ptr<const Corpus> corpus, std::shared_ptr<const Bm25Index> index);
  std::vector<ScoredPassage> search(std::string_view query, int k) const override;
  const Passage& passage(std::string_view id) const override;

 private:
  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<const Bm25Index> index_;
};

/// The provider must itself be safe for concurrent embed() calls when the
/// retriever is shared across sessions.
class DenseRetriever : public Retriever {
 public:
  DenseRetriever(std::shared_ptr<const Corpus> corpus, std::shared_ptr<EmbeddingProvider> provider);
  std::vector<ScoredPassage> search(std::string_view query, int k) const override;
  const Passage& passage(std::string_view id) const override;

 private:
  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<EmbeddingProvider> provider_;
  DenseIndex index_;
};

}  // namespace deepnote

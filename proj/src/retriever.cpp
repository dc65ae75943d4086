#include "deepnote/retriever.hpp"

#include "deepnote/error.hpp"

namespace deepnote {

Bm25Retriever::Bm25Retriever(std::shared_ptr<const Corpus> corpus, std::shared_ptr<const Bm25Index> index)
    : corpus_(std::move(corpus)), index_(std::move(index)) {
  if (!corpus_ || !index_) throw ConfigError("bm25 retriever needs a corpus and an index");
  if (corpus_->doc_count() != index_->doc_count()) throw ConfigError("index does not match corpus");
}

std::vector<ScoredPassage> Bm25Retriever::search(std::string_view query, int k) const {
  return index_->search(query, k);
}

const Passage& Bm25Retriever::passage(std::string_view id) const {
  const Passage* p = corpus_->find(id);
  if (!p) throw ConfigError("unknown passage id \"" + std::string(id) + "\"");
  return *p;
}

DenseRetriever::DenseRetriever(std::shared_ptr<const Corpus> corpus, std::shared_ptr<EmbeddingProvider> provider)
    : corpus_(std::move(corpus)), provider_(std::move(provider)), index_(DenseIndex::build(*provider_, *corpus_)) {}

std::vector<ScoredPassage> DenseRetriever::search(std::string_view query, int k) const {
  return index_.search(*provider_, query, k);
}

const Passage& DenseRetriever::passage(std::string_view id) const {
  const Passage* p = corpus_->find(id);
  if (!p) throw ConfigError("unknown passage id \"" + std::string(id) + "\"");
  return *p;
}

}  // namespace deepnote

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/corpus.hpp"
#include "deepnote/error.hpp"
#include "deepnote/scored_passage.hpp"

namespace deepnote {

using Embedding = std::vector<double>;

/// Raised when an embedding provider fails or breaks its contract.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Maps texts to unit-norm vectors of one fixed dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string name() const = 0;
};

/// Signed feature hashing over the retrieval tokenizer, L2-normalised.
/// Deterministic and dependency-free; texts without tokens map to a fixed
/// unit vector on the last axis.
class HashingEmbedder : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  std::string name() const override;

 private:
  std::size_t dimension_;
};

struct EmbeddingEndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string model = "bge-base-en-v1.5";
  std::string api_key_env = "DEEPNOTE_API_KEY";
  int timeout_seconds = 60;
};

/// Calls an OpenAI-compatible POST /v1/embeddings endpoint and normalises
/// the returned vectors.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(EmbeddingEndpointConfig config);
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  std::string name() const override;

 private:
  EmbeddingEndpointConfig config_;
};

/// Checks the provider contract: one vector per text, shared dimension,
/// unit norm within 1e-6. Throws ProviderError naming the provider.
void validate_embeddings(const EmbeddingProvider& provider, std::size_t expected_count,
                         const std::vector<Embedding>& vectors);

/// Brute-force cosine index over pre-embedded passages.
class DenseIndex {
 public:
  static DenseIndex build(EmbeddingProvider& provider, const Corpus& corpus, std::size_t batch_size = 64);

  std::vector<ScoredPassage> search(EmbeddingProvider& provider, std::string_view query, int k) const;
  std::vector<ScoredPassage> search_vector(const Embedding& query, int k) const;

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  std::vector<std::string> ids_;
  std::vector<double> matrix_;  // row-major, size() x dimension()
  std::size_t dimension_ = 0;
};

/// One-shot convenience: embeds the corpus, then searches it.
std::vector<ScoredPassage> dense_search(EmbeddingProvider& provider, const Corpus& corpus, std::string_view query,
                                        int k);

double cosine(const Embedding& a, const Embedding& b);

}  // namespace deepnote

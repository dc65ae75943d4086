#include "deepnote/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "deepnote/tokenizer.hpp"
#include "http_client.hpp"

namespace deepnote {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void normalize(Embedding& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

}  // namespace

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw ProviderError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ < 2) throw ConfigError("hashing embedder needs dimension >= 2");
}

std::vector<Embedding> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  const std::size_t buckets = dimension_ - 1;
  for (const auto& text : texts) {
    Embedding v(dimension_, 0.0);
    auto tokens = tokenize(text);
    for (const auto& t : tokens) {
      std::uint64_t h = fnv1a(t);
      v[h % buckets] += (h >> 63) ? -1.0 : 1.0;
    }
    bool all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    if (all_zero) {
      v.back() = 1.0;
    } else {
      normalize(v);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string HashingEmbedder::name() const { return "hashing-" + std::to_string(dimension_); }

HttpEmbeddingProvider::HttpEmbeddingProvider(EmbeddingEndpointConfig config) : config_(std::move(config)) {}

std::string HttpEmbeddingProvider::name() const { return "http:" + config_.model; }

std::vector<Embedding> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  const char* key = std::getenv(config_.api_key_env.c_str());
  nlohmann::json body = {{"model", config_.model}, {"input", texts}};
  auto endpoint = detail::resolve_endpoint(config_.base_url, "embeddings");
  auto res = detail::post_json(endpoint, key ? key : "", body.dump(),
                               std::chrono::seconds(config_.timeout_seconds));
  if (res.status == 0) throw ProviderError(name() + ": transport failure: " + res.error);
  if (res.status != 200) throw ProviderError(name() + ": HTTP " + std::to_string(res.status));
  std::vector<Embedding> out(texts.size());
  try {
    auto doc = nlohmann::json::parse(res.body);
    for (const auto& item : doc.at("data")) {
      auto idx = item.value("index", std::size_t{0});
      if (idx >= out.size()) throw ProviderError(name() + ": embedding index out of range");
      out[idx] = item.at("embedding").get<Embedding>();
      normalize(out[idx]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(name() + ": malformed response: " + e.what());
  }
  return out;
}

void validate_embeddings(const EmbeddingProvider& provider, std::size_t expected_count,
                         const std::vector<Embedding>& vectors) {
  if (vectors.size() != expected_count) {
    throw ProviderError(provider.name() + ": returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(expected_count) + " texts");
  }
  if (vectors.empty()) return;
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw ProviderError(provider.name() + ": zero-dimensional embedding");
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ProviderError(provider.name() + ": inconsistent embedding dimension");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-6) {
      throw ProviderError(provider.name() + ": embedding is not unit-norm");
    }
  }
}

DenseIndex DenseIndex::build(EmbeddingProvider& provider, const Corpus& corpus, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("embedding batch size must be positive");
  DenseIndex index;
  index.ids_.reserve(corpus.doc_count());
  for (std::size_t start = 0; start < corpus.doc_count(); start += batch_size) {
    std::vector<std::string> texts;
    const std::size_t end = std::min(corpus.doc_count(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) texts.push_back(corpus.at(i).index_text());
    auto vectors = provider.embed(texts);
    validate_embeddings(provider, texts.size(), vectors);
    if (index.dimension_ == 0) index.dimension_ = vectors.front().size();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != index.dimension_) {
        throw ProviderError(provider.name() + ": inconsistent embedding dimension across batches");
      }
      index.matrix_.insert(index.matrix_.end(), vectors[i].begin(), vectors[i].end());
      index.ids_.push_back(corpus.at(start + i).id);
    }
  }
  return index;
}

std::vector<ScoredPassage> DenseIndex::search(EmbeddingProvider& provider, std::string_view query, int k) const {
  if (k < 1) throw ConfigError("top-k must be >= 1, got " + std::to_string(k));
  auto vectors = provider.embed({std::string(query)});
  validate_embeddings(provider, 1, vectors);
  return search_vector(vectors.front(), k);
}

std::vector<ScoredPassage> DenseIndex::search_vector(const Embedding& query, int k) const {
  if (k < 1) throw ConfigError("top-k must be >= 1, got " + std::to_string(k));
  if (query.size() != dimension_) throw ProviderError("query dimension does not match the index");
  std::vector<ScoredPassage> hits;
  hits.reserve(ids_.size());
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    const double* v = matrix_.data() + row * dimension_;
    double dot = 0.0;
    for (std::size_t j = 0; j < dimension_; ++j) dot += v[j] * query[j];
    hits.push_back(ScoredPassage{ids_[row], dot, 0});
  }
  const auto keep = std::min<std::size_t>(hits.size(), static_cast<std::size_t>(k));
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), ranks_before);
  hits.resize(keep);
  assign_ranks(hits);
  return hits;
}

std::vector<ScoredPassage> dense_search(EmbeddingProvider& provider, const Corpus& corpus, std::string_view query,
                                        int k) {
  if (k < 1) throw ConfigError("top-k must be >= 1, got " + std::to_string(k));
  return DenseIndex::build(provider, corpus).search(provider, query, k);
}

}  // namespace deepnote

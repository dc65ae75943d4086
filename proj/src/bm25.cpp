#include "deepnote/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepnote/error.hpp"
#include "deepnote/tokenizer.hpp"

namespace deepnote {

using nlohmann::json;

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw ConfigError("bm25 k1 must be a finite value >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must lie in [0, 1]");
}

Bm25Index Bm25Index::build(const Corpus& corpus, Bm25Params params) {
  params.validate();
  if (corpus.doc_count() == 0) throw ConfigError("cannot index an empty corpus");

  Bm25Index index;
  index.params_ = params;
  index.doc_lengths_.reserve(corpus.doc_count());
  index.id_map_.reserve(corpus.doc_count());

  std::unordered_map<std::string, std::uint32_t> tf;
  for (std::size_t ord = 0; ord < corpus.doc_count(); ++ord) {
    const Passage& p = corpus.at(ord);
    auto tokens = tokenize(p.index_text());
    tf.clear();
    for (auto& t : tokens) ++tf[std::move(t)];
    for (auto& [term, count] : tf) {
      index.postings_[term].push_back(Posting{static_cast<std::uint32_t>(ord), count});
    }
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    index.id_map_.push_back(p.id);
  }
  index.finalize();
  return index;
}

void Bm25Index::finalize() {
  std::uint64_t total = 0;
  for (auto len : doc_lengths_) total += len;
  if (doc_lengths_.empty() || total == 0) throw DataError("index has no tokens");
  avg_doc_len_ = static_cast<double>(total) / static_cast<double>(doc_lengths_.size());
  length_norm_.resize(doc_lengths_.size());
  for (std::size_t i = 0; i < doc_lengths_.size(); ++i) {
    length_norm_[i] = params_.k1 * (1.0 - params_.b + params_.b * doc_lengths_[i] / avg_doc_len_);
  }
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  const auto* list = postings(term);
  return list ? list->size() : 0;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(doc_freq(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

const std::vector<Posting>* Bm25Index::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<ScoredPassage> Bm25Index::search(std::string_view query, int k) const {
  if (k < 1) throw ConfigError("top-k must be >= 1, got " + std::to_string(k));

  std::vector<double> acc(doc_count(), 0.0);
  std::vector<std::uint32_t> touched;
  const double k1_plus_1 = params_.k1 + 1.0;
  for (const auto& term : tokenize(query)) {
    const auto* list = postings(term);
    if (!list) continue;
    const double w = idf(term);
    for (const Posting& p : *list) {
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      const double tf = p.tf;
      acc[p.doc] += w * tf * k1_plus_1 / (tf + length_norm_[p.doc]);
    }
  }

  std::vector<ScoredPassage> hits;
  hits.reserve(touched.size());
  for (auto doc : touched) {
    if (acc[doc] > 0.0) hits.push_back(ScoredPassage{id_map_[doc], acc[doc], 0});
  }
  const auto keep = std::min<std::size_t>(hits.size(), static_cast<std::size_t>(k));
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), ranks_before);
  hits.resize(keep);
  assign_ranks(hits);
  return hits;
}

std::vector<ScoredPassage> bm25_search(const Bm25Index& index, std::string_view query, int k) {
  return index.search(query, k);
}

void Bm25Index::save(std::ostream& out) const {
  json header = {{"format", "deepnote-bm25"},
                 {"version", 1},
                 {"k1", params_.k1},
                 {"b", params_.b},
                 {"doc_count", doc_count()},
                 {"term_count", term_count()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < doc_count(); ++i) {
    out << json{{"ord", i}, {"id", id_map_[i]}, {"len", doc_lengths_[i]}}.dump() << '\n';
  }
  std::vector<const std::string*> terms;
  terms.reserve(postings_.size());
  for (const auto& entry : postings_) terms.push_back(&entry.first);
  std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
  for (const auto* term : terms) {
    json list = json::array();
    for (const Posting& p : postings_.at(*term)) list.push_back({p.doc, p.tf});
    out << json{{"term", *term}, {"postings", std::move(list)}}.dump() << '\n';
  }
}

namespace {

json next_record(std::istream& in, std::size_t& line_no, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed ") + what + " record: " + e.what(), line_no);
    }
  }
  throw DataError(std::string("unexpected end of file while reading ") + what, line_no);
}

}  // namespace

Bm25Index Bm25Index::load(std::istream& in) {
  std::size_t line_no = 0;
  Bm25Index index;
  try {
    json header = next_record(in, line_no, "bm25 header");
    if (header.value("format", "") != "deepnote-bm25" || header.value("version", 0) != 1) {
      throw DataError("not a deepnote-bm25 v1 section", line_no);
    }
    index.params_.k1 = header.at("k1").get<double>();
    index.params_.b = header.at("b").get<double>();
    index.params_.validate();
    const auto docs = header.at("doc_count").get<std::size_t>();
    const auto terms = header.at("term_count").get<std::size_t>();
    for (std::size_t i = 0; i < docs; ++i) {
      json rec = next_record(in, line_no, "document");
      if (rec.at("ord").get<std::size_t>() != i) throw DataError("document ordinals out of order", line_no);
      index.id_map_.push_back(rec.at("id").get<std::string>());
      index.doc_lengths_.push_back(rec.at("len").get<std::uint32_t>());
    }
    for (std::size_t i = 0; i < terms; ++i) {
      json rec = next_record(in, line_no, "postings");
      std::vector<Posting> list;
      for (const auto& pair : rec.at("postings")) {
        Posting p{pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>()};
        if (p.doc >= docs || p.tf == 0 || p.tf > index.doc_lengths_[p.doc]) {
          throw DataError("posting out of range", line_no);
        }
        if (!list.empty() && list.back().doc >= p.doc) throw DataError("postings not sorted", line_no);
        list.push_back(p);
      }
      index.postings_.emplace(rec.at("term").get<std::string>(), std::move(list));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid bm25 section: ") + e.what(), line_no);
  }
  index.finalize();
  return index;
}

void save_index_bundle(const std::filesystem::path& path, const Corpus& corpus, const Bm25Index& index) {
  if (corpus.doc_count() != index.doc_count()) throw ConfigError("index does not match corpus");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << json{{"format", "deepnote-index"}, {"version", 1}, {"passages", corpus.doc_count()}}.dump() << '\n';
  write_corpus(out, corpus);
  index.save(out);
  if (!out) throw DataError("write failed for " + path.string());
}

IndexBundle load_index_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty index file " + path.string());
  std::size_t passages = 0;
  try {
    json header = json::parse(line);
    if (header.value("format", "") != "deepnote-index" || header.value("version", 0) != 1) {
      throw DataError("not a deepnote index file: " + path.string(), 1);
    }
    passages = header.at("passages").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid index header: ") + e.what(), 1);
  }
  std::ostringstream corpus_lines;
  for (std::size_t i = 0; i < passages; ++i) {
    if (!std::getline(in, line)) throw DataError("truncated passage section", i + 2);
    corpus_lines << line << '\n';
  }
  std::istringstream corpus_in(corpus_lines.str());
  Corpus corpus = parse_corpus(corpus_in);
  Bm25Index index = Bm25Index::load(in);
  if (index.doc_count() != corpus.doc_count()) throw DataError("index and passage counts differ");
  for (std::size_t i = 0; i < corpus.doc_count(); ++i) {
    if (index.passage_id(i) != corpus.at(i).id || index.doc_length(i) != corpus.doc_length(i)) {
      throw DataError("index entry " + std::to_string(i) + " does not match its passage");
    }
  }
  return IndexBundle{std::move(corpus), std::move(index)};
}

}  // namespace deepnote

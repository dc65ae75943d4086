#include "deepnote/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "deepnote/error.hpp"
#include "deepnote/tokenizer.hpp"

namespace deepnote {
namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json parse_record(const std::string& line, std::size_t line_no) {
  try {
    json record = json::parse(line);
    if (!record.is_object()) throw DataError("record is not a JSON object", line_no);
    return record;
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed record: ") + e.what(), line_no);
  }
}

std::string required_string(const json& record, const char* field, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw DataError(std::string("missing string field \"") + field + "\"", line_no);
  }
  return it->get<std::string>();
}

std::string optional_string(const json& record, const char* field, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(std::string("field \"") + field + "\" must be a string", line_no);
  return it->get<std::string>();
}

// Accepts either a string or a numeric id.
std::string record_id(const json& record, std::size_t line_no) {
  auto it = record.find("id");
  if (it == record.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw DataError("field \"id\" must be a string or integer", line_no);
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string> string_list(const json& value, const char* field, std::size_t line_no) {
  if (!value.is_array()) throw DataError(std::string("field \"") + field + "\" must be a list", line_no);
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (item.is_string()) {
      out.push_back(item.get<std::string>());
    } else if (item.is_boolean()) {
      out.emplace_back(item.get<bool>() ? "yes" : "no");
    } else if (item.is_number()) {
      out.push_back(item.dump());
    } else {
      throw DataError(std::string("field \"") + field + "\" holds a non-string item", line_no);
    }
  }
  return out;
}

}  // namespace

std::string Passage::index_text() const {
  if (title.empty()) return text;
  return title + " " + text;
}

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
  if (passages_.empty()) throw DataError("corpus is empty");
  lengths_.reserve(passages_.size());
  by_id_.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const Passage& p = passages_[i];
    if (p.id.empty()) throw DataError("passage " + std::to_string(i) + " has an empty id");
    if (is_blank(p.text)) throw DataError("passage \"" + p.id + "\" has empty text");
    if (!by_id_.emplace(p.id, i).second) throw DataError("duplicate passage id \"" + p.id + "\"");
    std::size_t len = count_tokens(p.index_text());
    lengths_.push_back(len);
    total_tokens_ += len;
  }
  if (total_tokens_ == 0) throw DataError("corpus contains no tokens");
}

double Corpus::avg_doc_len() const noexcept {
  return static_cast<double>(total_tokens_) / static_cast<double>(passages_.size());
}

const Passage* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &passages_[it->second];
}

std::optional<std::size_t> Corpus::ordinal_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<Passage> passages;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json record = parse_record(line, line_no);
    Passage p;
    p.id = record_id(record, line_no);
    if (p.id.empty()) throw DataError("missing field \"id\"", line_no);
    p.title = optional_string(record, "title", line_no);
    p.text = required_string(record, "text", line_no);
    if (is_blank(p.text)) throw DataError("passage \"" + p.id + "\" has empty text", line_no);
    if (auto [it, fresh] = seen.emplace(p.id, line_no); !fresh) {
      throw DataError("duplicate passage id \"" + p.id + "\" (first seen on line " +
                          std::to_string(it->second) + ")",
                      line_no);
    }
    passages.push_back(std::move(p));
  }
  return Corpus(std::move(passages));
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.passages()) {
    json record = {{"id", p.id}, {"title", p.title}, {"text", p.text}};
    out << record.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_corpus(out, corpus);
  if (!out) throw DataError("write failed for " + path.string());
}

TaskStyle parse_task_style(std::string_view name) {
  if (name == "multihop") return TaskStyle::Multihop;
  if (name == "longform") return TaskStyle::Longform;
  if (name == "shortform") return TaskStyle::Shortform;
  throw ConfigError("unknown task style \"" + std::string(name) + "\"");
}

std::string_view to_string(TaskStyle style) {
  switch (style) {
    case TaskStyle::Multihop:
      return "multihop";
    case TaskStyle::Longform:
      return "longform";
    case TaskStyle::Shortform:
      return "shortform";
  }
  return "unknown";
}

std::vector<QaExample> parse_dataset(std::istream& in, TaskStyle style) {
  std::vector<QaExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json record = parse_record(line, line_no);
    QaExample ex;
    ex.id = record_id(record, line_no);
    if (ex.id.empty()) ex.id = "line-" + std::to_string(line_no);
    ex.question = required_string(record, "question", line_no);
    if (is_blank(ex.question)) throw DataError("empty question", line_no);

    if (auto it = record.find("answers"); it != record.end() && !it->is_null()) {
      ex.gold_answers = string_list(*it, "answers", line_no);
    }
    if (auto it = record.find("qa_pairs"); it != record.end() && !it->is_null()) {
      if (!it->is_array()) throw DataError("field \"qa_pairs\" must be a list", line_no);
      for (const auto& pair : *it) {
        if (!pair.is_object()) throw DataError("qa_pairs entries must be objects", line_no);
        QaPair qp;
        qp.sub_question = optional_string(pair, "sub_question", line_no);
        auto aliases = pair.find("aliases");
        if (aliases == pair.end()) throw DataError("qa_pairs entry missing \"aliases\"", line_no);
        qp.aliases = string_list(*aliases, "aliases", line_no);
        if (qp.aliases.empty()) throw DataError("qa_pairs entry has no aliases", line_no);
        ex.qa_pairs.push_back(std::move(qp));
      }
    }

    switch (style) {
      case TaskStyle::Multihop:
        if (ex.gold_answers.empty()) throw DataError("multihop record needs non-empty \"answers\"", line_no);
        break;
      case TaskStyle::Longform:
        if (ex.qa_pairs.empty()) throw DataError("longform record needs non-empty \"qa_pairs\"", line_no);
        break;
      case TaskStyle::Shortform: {
        if (ex.gold_answers.empty()) throw DataError("shortform record needs non-empty \"answers\"", line_no);
        std::string gold = ex.gold_answers.front();
        std::transform(gold.begin(), gold.end(), gold.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (gold != "yes" && gold != "no") throw DataError("shortform gold must be yes or no", line_no);
        break;
      }
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::vector<QaExample> load_dataset(const std::filesystem::path& path, TaskStyle style) {
  auto in = open_for_read(path);
  return parse_dataset(in, style);
}

}  // namespace deepnote

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace deepnote {

struct Passage {
  std::string id;
  std::string title;  // may be empty
  std::string text;

  /// Text seen by the retrievers: "title text", or just text when untitled.
  std::string index_text() const;

  friend bool operator==(const Passage&, const Passage&) = default;
};

/// Immutable, validated collection of passages with token statistics.
class Corpus {
 public:
  /// Throws DataError on duplicate ids, blank text, or an empty collection.
  explicit Corpus(std::vector<Passage> passages);

  const std::vector<Passage>& passages() const noexcept { return passages_; }
  std::size_t doc_count() const noexcept { return passages_.size(); }
  double avg_doc_len() const noexcept;
  std::size_t total_tokens() const noexcept { return total_tokens_; }
  std::size_t doc_length(std::size_t ordinal) const { return lengths_.at(ordinal); }

  const Passage& at(std::size_t ordinal) const { return passages_.at(ordinal); }
  const Passage* find(std::string_view id) const;
  std::optional<std::size_t> ordinal_of(std::string_view id) const;

 private:
  std::vector<Passage> passages_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t total_tokens_ = 0;
};

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

enum class TaskStyle { Multihop, Longform, Shortform };

TaskStyle parse_task_style(std::string_view name);
std::string_view to_string(TaskStyle style);

struct QaPair {
  std::string sub_question;
  std::vector<std::string> aliases;
};

struct QaExample {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;  // multihop / shortform
  std::vector<QaPair> qa_pairs;           // longform
};

/// Reads line-delimited QA records, validating the fields `style` needs.
std::vector<QaExample> parse_dataset(std::istream& in, TaskStyle style);
std::vector<QaExample> load_dataset(const std::filesystem::path& path, TaskStyle style);

}  // namespace deepnote

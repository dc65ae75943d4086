#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/corpus.hpp"
#include "deepnote/error.hpp"

namespace deepnote {

enum class TemplateName {
  Init,
  QueryRefine,
  KnowledgeAccumulate,
  RetrievalDecision,
  AnswerMultihop,
  AnswerLongform,
  AnswerShortform,
  JudgeInit,
  JudgeQueryRefine,
  EvidenceExtract,
};

inline constexpr std::array<TemplateName, 10> kAllTemplates = {
    TemplateName::Init,           TemplateName::QueryRefine,     TemplateName::KnowledgeAccumulate,
    TemplateName::RetrievalDecision, TemplateName::AnswerMultihop, TemplateName::AnswerLongform,
    TemplateName::AnswerShortform, TemplateName::JudgeInit,       TemplateName::JudgeQueryRefine,
    TemplateName::EvidenceExtract,
};

std::string_view to_string(TemplateName name);
/// Asset file name under prompts/, e.g. "init.txt".
std::string_view template_file_name(TemplateName name);
TemplateName answer_template_for(TaskStyle style);

class RenderError : public Error {
 public:
  using Error::Error;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// A prompt body with `{name}` placeholders. `{{` and `}}` render as literal
/// braces. Bodies are validated on construction.
class PromptTemplate {
 public:
  PromptTemplate(TemplateName name, std::string body);

  TemplateName name() const noexcept { return name_; }
  const std::string& body() const noexcept { return body_; }
  /// Placeholder names in order of first appearance.
  const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

  /// Throws RenderError naming the first unbound placeholder.
  std::string render(const Bindings& bindings) const;

 private:
  TemplateName name_;
  std::string body_;
  std::vector<std::string> placeholders_;
};

std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

/// The full set of templates used by the engine and the data builder.
class TemplateSet {
 public:
  /// Templates compiled in from prompts/.
  static const TemplateSet& builtin();
  /// Built-ins overridden by any <name>.txt found in `dir`.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateName name) const;

 private:
  std::vector<PromptTemplate> templates_;  // indexed by TemplateName
};

/// "[i] title\ntext" blocks joined by newlines, numbered from 1.
std::string format_refs(std::span<const Passage> passages);
/// "1. q\n2. q ..." ; empty string for an empty log.
std::string format_query_log(const std::vector<std::string>& queries);
/// One {"_id": i, "content": "..."} line per item, ids from 1.
std::string format_id_list(const std::vector<std::string>& items);

/// Status token extraction for the retrieval-decision stage.
bool parse_status(std::string_view text);
std::string canonical_status(bool value);

std::vector<std::string> parse_queries(std::string_view text, int max_n);

struct BestWorst {
  int best_id = 0;
  int worst_id = 0;
  friend bool operator==(const BestWorst&, const BestWorst&) = default;
};
BestWorst parse_best_worst(std::string_view text);

namespace detail {
std::string_view builtin_template_text(TemplateName name);
}

}  // namespace deepnote

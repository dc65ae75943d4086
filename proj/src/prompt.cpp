#include "deepnote/prompt.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace deepnote {
namespace {

bool is_ident_char(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

std::string strip_trailing_newline(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

// Walks the body once, calling on_text for literal runs and on_slot for
// placeholders. Throws ConfigError on stray braces.
template <typename OnText, typename OnSlot>
void scan_body(TemplateName name, std::string_view body, OnText on_text, OnSlot on_slot) {
  std::size_t i = 0;
  std::size_t literal_start = 0;
  auto flush = [&](std::size_t end) {
    if (end > literal_start) on_text(body.substr(literal_start, end - literal_start));
  };
  while (i < body.size()) {
    char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      flush(i);
      on_text("{");
      i += 2;
      literal_start = i;
    } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      flush(i);
      on_text("}");
      i += 2;
      literal_start = i;
    } else if (c == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      if (j == i + 1 || j >= body.size() || body[j] != '}') {
        throw ConfigError("template " + std::string(to_string(name)) + ": stray '{' at offset " + std::to_string(i));
      }
      flush(i);
      on_slot(body.substr(i + 1, j - i - 1));
      i = j + 1;
      literal_start = i;
    } else if (c == '}') {
      throw ConfigError("template " + std::string(to_string(name)) + ": stray '}' at offset " + std::to_string(i));
    } else {
      ++i;
    }
  }
  flush(body.size());
}

}  // namespace

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::Init:
      return "init";
    case TemplateName::QueryRefine:
      return "query_refine";
    case TemplateName::KnowledgeAccumulate:
      return "knowledge_accumulate";
    case TemplateName::RetrievalDecision:
      return "retrieval_decision";
    case TemplateName::AnswerMultihop:
      return "answer_multihop";
    case TemplateName::AnswerLongform:
      return "answer_longform";
    case TemplateName::AnswerShortform:
      return "answer_shortform";
    case TemplateName::JudgeInit:
      return "judge_init";
    case TemplateName::JudgeQueryRefine:
      return "judge_query_refine";
    case TemplateName::EvidenceExtract:
      return "evidence_extract";
  }
  return "unknown";
}

std::string_view template_file_name(TemplateName name) {
  static const auto names = [] {
    std::array<std::string, kAllTemplates.size()> out;
    for (auto t : kAllTemplates) out[static_cast<std::size_t>(t)] = std::string(to_string(t)) + ".txt";
    return out;
  }();
  return names.at(static_cast<std::size_t>(name));
}

TemplateName answer_template_for(TaskStyle style) {
  switch (style) {
    case TaskStyle::Multihop:
      return TemplateName::AnswerMultihop;
    case TaskStyle::Longform:
      return TemplateName::AnswerLongform;
    case TaskStyle::Shortform:
      return TemplateName::AnswerShortform;
  }
  return TemplateName::AnswerMultihop;
}

PromptTemplate::PromptTemplate(TemplateName name, std::string body) : name_(name), body_(std::move(body)) {
  scan_body(
      name_, body_, [](std::string_view) {},
      [this](std::string_view slot) {
        for (const auto& p : placeholders_) {
          if (p == slot) return;
        }
        placeholders_.emplace_back(slot);
      });
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string out;
  out.reserve(body_.size() + 256);
  scan_body(
      name_, body_, [&](std::string_view text) { out.append(text); },
      [&](std::string_view slot) {
        auto it = bindings.find(slot);
        if (it == bindings.end()) {
          throw RenderError("template " + std::string(to_string(name_)) + ": unbound placeholder {" +
                            std::string(slot) + "}");
        }
        out.append(it->second);
      });
  return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) { return tmpl.render(bindings); }

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (auto name : kAllTemplates) {
      s.templates_.emplace_back(name, strip_trailing_newline(std::string(detail::builtin_template_text(name))));
    }
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir.string());
  TemplateSet s = builtin();
  for (auto name : kAllTemplates) {
    auto path = dir / std::string(template_file_name(name));
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    s.templates_[static_cast<std::size_t>(name)] = PromptTemplate(name, strip_trailing_newline(buf.str()));
  }
  return s;
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
  return templates_.at(static_cast<std::size_t>(name));
}

std::string format_refs(std::span<const Passage> passages) {
  std::string out;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += "[" + std::to_string(i + 1) + "]";
    if (!passages[i].title.empty()) {
      out += " " + passages[i].title + "\n";
    } else {
      out += " ";
    }
    out += passages[i].text;
  }
  return out;
}

std::string format_query_log(const std::vector<std::string>& queries) {
  std::string out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + queries[i];
  }
  return out;
}

std::string format_id_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += "{\"_id\": " + std::to_string(i + 1) + ", \"content\": " + nlohmann::json(items[i]).dump() + "}";
  }
  return out;
}

}  // namespace deepnote

#include "deepnote/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

#include "deepnote/error.hpp"

namespace deepnote {
namespace {

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

void require_golds(const std::vector<std::string>& golds) {
  if (golds.empty()) throw ConfigError("metric needs at least one gold answer");
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    lowered.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  std::string out;
  for (const auto& word : split_ws(lowered)) {
    if (is_article(word)) continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) { return split_ws(normalize_answer(text)); }

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  require_golds(golds);
  const auto p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

double token_f1(std::string_view pred, const std::vector<std::string>& golds) {
  require_golds(golds);
  const auto p = normalized_tokens(pred);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_tokens(p, normalized_tokens(g)));
  return best;
}

int cover_accuracy(std::string_view pred, const std::vector<std::string>& golds) {
  require_golds(golds);
  const auto p = normalized_tokens(pred);
  for (const auto& g : golds) {
    auto gt = normalized_tokens(g);
    if (gt.empty()) {
      if (p.empty()) return 1;
      continue;
    }
    if (contains_run(p, gt)) return 1;
  }
  return 0;
}

StrEmHit str_em_hit(std::string_view pred, const std::vector<QaPair>& qa_pairs) {
  if (qa_pairs.empty()) throw ConfigError("str-em needs at least one qa pair");
  const auto p = normalize_answer(pred);
  int covered = 0;
  for (const auto& pair : qa_pairs) {
    for (const auto& alias : pair.aliases) {
      auto a = normalize_answer(alias);
      if (!a.empty() && p.find(a) != std::string::npos) {
        ++covered;
        break;
      }
    }
  }
  StrEmHit out;
  out.str_em = static_cast<double>(covered) / static_cast<double>(qa_pairs.size());
  out.str_hit = covered == static_cast<int>(qa_pairs.size()) ? 1 : 0;
  return out;
}

std::optional<std::string> extract_yes_no(std::string_view pred) {
  for (const auto& t : normalized_tokens(pred)) {
    if (t == "yes" || t == "no") return t;
  }
  return std::nullopt;
}

int yesno_accuracy(std::string_view pred, std::string_view gold) {
  auto g = normalize_answer(gold);
  if (g != "yes" && g != "no") throw ConfigError("yes/no gold must be yes or no");
  auto p = extract_yes_no(pred);
  return p && *p == g ? 1 : 0;
}

std::vector<std::string> metric_names(TaskStyle style) {
  switch (style) {
    case TaskStyle::Multihop:
      return {"acc", "f1", "em"};
    case TaskStyle::Longform:
      return {"str_em", "str_hit"};
    case TaskStyle::Shortform:
      return {"acc"};
  }
  return {};
}

std::map<std::string, double> score_example(TaskStyle style, std::string_view pred, const QaExample& example) {
  switch (style) {
    case TaskStyle::Multihop:
      return {{"acc", cover_accuracy(pred, example.gold_answers)},
              {"f1", token_f1(pred, example.gold_answers)},
              {"em", exact_match(pred, example.gold_answers)}};
    case TaskStyle::Longform: {
      auto s = str_em_hit(pred, example.qa_pairs);
      return {{"str_em", s.str_em}, {"str_hit", s.str_hit}};
    }
    case TaskStyle::Shortform:
      if (example.gold_answers.empty()) throw ConfigError("shortform example has no gold");
      return {{"acc", yesno_accuracy(pred, example.gold_answers.front())}};
  }
  return {};
}

}  // namespace deepnote

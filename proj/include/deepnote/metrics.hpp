#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/corpus.hpp"

namespace deepnote {

/// Extractive-QA normalisation: lowercase, strip ASCII punctuation, drop the
/// articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);
std::vector<std::string> normalized_tokens(std::string_view text);

int exact_match(std::string_view pred, const std::vector<std::string>& golds);
double token_f1(std::string_view pred, const std::vector<std::string>& golds);
/// 1 when some normalised gold is a contiguous token run of the normalised prediction.
int cover_accuracy(std::string_view pred, const std::vector<std::string>& golds);

struct StrEmHit {
  double str_em = 0.0;
  int str_hit = 0;
};
/// Long-form coverage: fraction of sub-questions with an alias contained (as a
/// normalised substring) in the normalised prediction.
StrEmHit str_em_hit(std::string_view pred, const std::vector<QaPair>& qa_pairs);

/// First standalone yes/no token of the prediction against a yes/no gold.
int yesno_accuracy(std::string_view pred, std::string_view gold);
std::optional<std::string> extract_yes_no(std::string_view pred);

/// Metric names reported for a task style, in report order.
std::vector<std::string> metric_names(TaskStyle style);

/// All metrics for one prediction, in [0, 1].
std::map<std::string, double> score_example(TaskStyle style, std::string_view pred, const QaExample& example);

}  // namespace deepnote

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepnote/corpus.hpp"
#include "deepnote/llm.hpp"
#include "deepnote/note_engine.hpp"
#include "deepnote/prompt.hpp"
#include "deepnote/retriever.hpp"
#include "deepnote/trace.hpp"

namespace deepnote {

enum class EvalMode { DeepNote, Vanilla, InitOnly };

EvalMode parse_eval_mode(std::string_view name);
std::string_view to_string(EvalMode mode);

struct EvalConfig {
  EngineConfig engine;
  EvalMode mode = EvalMode::DeepNote;
  int parallelism = 4;
};

struct EvalRow {
  std::string id;
  std::string prediction;
  std::map<std::string, double> metrics;
  int retrieval_count_adaptive = 0;
  int retrieval_count_total = 0;
  std::optional<std::string> error;
};

struct RetrievalStats {
  double mean_adaptive = 0.0;
  double mean_total = 0.0;
  int max_adaptive = 0;
};

struct EvalReport {
  EvalMode mode = EvalMode::DeepNote;
  TaskStyle task_style = TaskStyle::Multihop;
  std::vector<EvalRow> rows;                  // dataset order
  std::map<std::string, double> aggregates;  // mean x 100
  RetrievalStats retrieval;
  int errors = 0;
};

/// Called once per finished example (from worker threads, serialised by the
/// harness) with the row and its session trace.
using TraceSink = std::function<void(const EvalRow&, const TraceRecord&)>;

/// Runs every example through the chosen mode and scores it. Per-example
/// failures become zero-metric rows with an error message. Aggregates are
/// computed over rows sorted by id, so they do not depend on dataset order.
EvalReport evaluate(const EvalConfig& config, const std::vector<QaExample>& dataset, const Retriever& retriever,
                    GenerationBackend& backend, const TemplateSet& templates = TemplateSet::builtin(),
                    const TraceSink& sink = {});

/// Table-style summary line, e.g. "deepnote multihop n=2 acc=50.0 f1=50.0 em=50.0".
std::string format_summary(const EvalReport& report);

nlohmann::json row_to_json(const EvalRow& row);
nlohmann::json summary_to_json(const EvalReport& report);

}  // namespace deepnote

#include "deepnote/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <thread>

#include "deepnote/metrics.hpp"

namespace deepnote {

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "deepnote") return EvalMode::DeepNote;
  if (name == "vanilla") return EvalMode::Vanilla;
  if (name == "init-only") return EvalMode::InitOnly;
  throw ConfigError("unknown mode \"" + std::string(name) + "\"");
}

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::DeepNote:
      return "deepnote";
    case EvalMode::Vanilla:
      return "vanilla";
    case EvalMode::InitOnly:
      return "init-only";
  }
  return "unknown";
}

namespace {

struct Outcome {
  EvalRow row;
  TraceRecord trace;
};

Outcome run_example(NoteEngine& engine, EvalMode mode, TaskStyle style, const QaExample& example) {
  Outcome out;
  out.row.id = example.id;
  out.trace.id = example.id;
  out.trace.mode = std::string(to_string(mode));
  out.trace.question = example.question;
  for (const auto& name : metric_names(style)) out.row.metrics[name] = 0.0;
  try {
    AnswerResult result = mode == EvalMode::DeepNote  ? engine.run(example.question)
                          : mode == EvalMode::Vanilla ? engine.run_vanilla(example.question)
                                                      : engine.run_init_only(example.question);
    out.row.prediction = result.answer;
    out.row.metrics = score_example(style, result.answer, example);
    out.row.retrieval_count_adaptive = result.retrieval_count_adaptive;
    out.row.retrieval_count_total = result.retrieval_count_total;
    out.trace.result = std::move(result);
  } catch (const SessionAborted& e) {
    out.row.error = e.what();
    out.trace.error = e.what();
    out.trace.partial = e.partial();
  } catch (const Error& e) {
    out.row.error = e.what();
    out.trace.error = e.what();
  }
  return out;
}

}  // namespace

EvalReport evaluate(const EvalConfig& config, const std::vector<QaExample>& dataset, const Retriever& retriever,
                    GenerationBackend& backend, const TemplateSet& templates, const TraceSink& sink) {
  if (dataset.empty()) throw ConfigError("dataset is empty");
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  NoteEngine engine(config.engine, retriever, backend, templates);
  const TaskStyle style = config.engine.task_style;

  EvalReport report;
  report.mode = config.mode;
  report.task_style = style;
  report.rows.resize(dataset.size());

  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < dataset.size(); i = next++) {
      Outcome out = run_example(engine, config.mode, style, dataset[i]);
      if (sink) {
        std::lock_guard lock(sink_mutex);
        sink(out.row, out.trace);
      }
      report.rows[i] = std::move(out.row);
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), dataset.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<const EvalRow*> sorted;
  for (const auto& row : report.rows) sorted.push_back(&row);
  std::stable_sort(sorted.begin(), sorted.end(), [](const EvalRow* a, const EvalRow* b) { return a->id < b->id; });

  const double n = static_cast<double>(sorted.size());
  for (const auto& name : metric_names(style)) {
    double sum = 0.0;
    for (const auto* row : sorted) sum += row->metrics.at(name);
    report.aggregates[name] = 100.0 * sum / n;
  }
  double adaptive = 0.0, total = 0.0;
  for (const auto* row : sorted) {
    adaptive += row->retrieval_count_adaptive;
    total += row->retrieval_count_total;
    report.retrieval.max_adaptive = std::max(report.retrieval.max_adaptive, row->retrieval_count_adaptive);
    if (row->error) ++report.errors;
  }
  report.retrieval.mean_adaptive = adaptive / n;
  report.retrieval.mean_total = total / n;
  return report;
}

std::string format_summary(const EvalReport& report) {
  std::string out = std::string(to_string(report.mode)) + " " + std::string(to_string(report.task_style)) +
                    " n=" + std::to_string(report.rows.size());
  char buf[64];
  for (const auto& name : metric_names(report.task_style)) {
    std::snprintf(buf, sizeof buf, " %s=%.1f", name.c_str(), report.aggregates.at(name));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " retrievals(adaptive)=%.2f", report.retrieval.mean_adaptive);
  out += buf;
  if (report.errors > 0) out += " errors=" + std::to_string(report.errors);
  return out;
}

nlohmann::json row_to_json(const EvalRow& row) {
  nlohmann::json out = {
      {"id", row.id},
      {"pred", row.prediction},
      {"metrics", row.metrics},
      {"retrieval_counts", {{"adaptive", row.retrieval_count_adaptive}, {"total", row.retrieval_count_total}}},
  };
  if (row.error) out["error"] = *row.error;
  return out;
}

nlohmann::json summary_to_json(const EvalReport& report) {
  nlohmann::json aggregates;
  for (const auto& [name, value] : report.aggregates) aggregates[name] = value;
  return {
      {"type", "summary"},
      {"mode", std::string(to_string(report.mode))},
      {"task", std::string(to_string(report.task_style))},
      {"examples", report.rows.size()},
      {"errors", report.errors},
      {"aggregates", aggregates},
      {"retrieval_counts",
       {{"mean_adaptive", report.retrieval.mean_adaptive},
        {"mean_total", report.retrieval.mean_total},
        {"max_adaptive", report.retrieval.max_adaptive}}},
  };
}

}  // namespace deepnote

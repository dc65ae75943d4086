#include "deepnote/note_engine.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace deepnote {
namespace {

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

void EngineConfig::validate() const {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (max_step < 1) throw ConfigError("max_step must be >= 1");
  if (max_failure < 1) throw ConfigError("max_failure must be >= 1");
  if (max_failure > max_step) throw ConfigError("max_failure cannot exceed max_step");
  if (queries_per_refinement < 1) throw ConfigError("queries_per_refinement must be >= 1");
  sampling.validate();
}

std::string_view to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::Improved:
      return "improved";
    case StepOutcome::Rejected:
      return "rejected";
    case StepOutcome::DecisionUnparsed:
      return "decision_unparsed";
    case StepOutcome::RefinementFailed:
      return "refinement_failed";
    case StepOutcome::EmptyCandidate:
      return "empty_candidate";
  }
  return "unknown";
}

std::string normalize_query(std::string_view query) {
  std::string out;
  bool pending_space = false;
  for (char ch : query) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  return out;
}

std::vector<ScoredPassage> merge_hits(const std::vector<std::vector<ScoredPassage>>& lists) {
  std::unordered_map<std::string, double> best;
  std::vector<std::string> order;
  for (const auto& list : lists) {
    for (const auto& hit : list) {
      auto [it, fresh] = best.emplace(hit.passage_id, hit.score);
      if (fresh) {
        order.push_back(hit.passage_id);
      } else {
        it->second = std::max(it->second, hit.score);
      }
    }
  }
  std::vector<ScoredPassage> merged;
  merged.reserve(order.size());
  for (auto& id : order) merged.push_back(ScoredPassage{id, best[id], 0});
  std::sort(merged.begin(), merged.end(), ranks_before);
  assign_ranks(merged);
  return merged;
}

NoteEngine::NoteEngine(EngineConfig config, const Retriever& retriever, GenerationBackend& backend,
                       const TemplateSet& templates)
    : config_(std::move(config)), retriever_(retriever), backend_(backend), templates_(templates) {
  config_.validate();
}

std::string NoteEngine::generate(const std::string& prompt) {
  return backend_.complete(ChatRequest{prompt, config_.sampling, config_.model});
}

std::vector<Passage> NoteEngine::lookup(const std::vector<ScoredPassage>& hits) const {
  std::vector<Passage> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) out.push_back(retriever_.passage(hit.passage_id));
  return out;
}

SessionState NoteEngine::initialize_note(std::string_view q0) {
  if (trim_copy(q0).empty()) throw ConfigError("question must be non-empty");
  SessionState state;
  state.q0 = std::string(q0);
  state.initial_retrieval = retriever_.search(q0, config_.top_k);
  const auto prompt = templates_.get(TemplateName::Init).render({
      {"query", state.q0},
      {"refs", format_refs(lookup(state.initial_retrieval))},
  });
  std::string text = trim_copy(generate(prompt));
  if (text.empty()) throw Error("note initialization returned an empty note");
  state.initial_note = Note{std::move(text), 0};
  state.best_note = state.initial_note;
  return state;
}

std::vector<std::string> NoteEngine::refine_queries(SessionState& state) {
  const auto prompt = templates_.get(TemplateName::QueryRefine).render({
      {"query", state.q0},
      {"note", state.best_note.text},
      {"query_log", format_query_log(state.query_log)},
  });
  auto proposed = parse_queries(generate(prompt), config_.queries_per_refinement);

  std::unordered_set<std::string> seen;
  seen.insert(normalize_query(state.q0));
  for (const auto& q : state.query_log) seen.insert(normalize_query(q));

  std::vector<std::string> fresh;
  for (auto& q : proposed) {
    if (seen.insert(normalize_query(q)).second) fresh.push_back(std::move(q));
  }
  if (fresh.empty()) throw RefinementExhausted("every refined query duplicates an earlier one");
  state.query_log.insert(state.query_log.end(), fresh.begin(), fresh.end());
  return fresh;
}

std::optional<Note> NoteEngine::accumulate(SessionState& state, const std::vector<std::string>& queries,
                                           IterationTrace& trace) {
  if (queries.empty()) throw ConfigError("accumulate needs at least one query");
  for (const auto& q : queries) trace.retrieved.push_back(retriever_.search(q, config_.top_k));
  const auto merged = merge_hits(trace.retrieved);
  const auto prompt = templates_.get(TemplateName::KnowledgeAccumulate).render({
      {"query", state.q0},
      {"refs", format_refs(lookup(merged))},
      {"note", state.best_note.text},
  });
  std::string text = trim_copy(generate(prompt));
  if (text.empty()) return std::nullopt;
  return Note{std::move(text), state.steps_executed + 1};
}

std::optional<bool> NoteEngine::decide(SessionState& state, const Note& candidate) {
  if (candidate.text.empty()) throw ConfigError("cannot judge an empty note");
  const auto prompt = templates_.get(TemplateName::RetrievalDecision).render({
      {"query", state.q0},
      {"best_note", state.best_note.text},
      {"new_note", candidate.text},
  });
  const std::string output = generate(prompt);
  std::optional<bool> decision;
  try {
    decision = parse_status(output);
  } catch (const ParseError&) {
    decision = std::nullopt;
  }
  if (decision.value_or(false)) {
    state.best_note = candidate;
  } else {
    ++state.failures;
  }
  return decision;
}

std::string NoteEngine::render_answer_prompt(std::string_view q0, std::string_view reference) const {
  return templates_.get(answer_template_for(config_.task_style))
      .render({{"query", std::string(q0)}, {"note", std::string(reference)}});
}

AnswerResult NoteEngine::finish(SessionState state, std::string reference, int adaptive_retrievals) {
  AnswerResult result;
  result.answer = trim_copy(generate(render_answer_prompt(state.q0, reference)));
  result.final_best_note = state.best_note;
  result.reference = std::move(reference);
  result.state = std::move(state);
  result.retrieval_count_adaptive = adaptive_retrievals;
  result.retrieval_count_total = adaptive_retrievals + 1;
  return result;
}

AnswerResult NoteEngine::run(std::string_view q0) {
  if (trim_copy(q0).empty()) throw ConfigError("question must be non-empty");
  SessionState state;
  state.q0 = std::string(q0);
  std::optional<IterationTrace> in_flight;
  int adaptive = 0;
  try {
    state = initialize_note(q0);
    while (state.steps_executed < config_.max_step && state.failures < config_.max_failure) {
      in_flight.emplace();
      IterationTrace& trace = *in_flight;
      trace.step = state.steps_executed + 1;
      try {
        trace.refined_queries = refine_queries(state);
      } catch (const ParseError& e) {
        trace.outcome = StepOutcome::RefinementFailed;
        trace.detail = e.what();
      } catch (const RefinementExhausted& e) {
        trace.outcome = StepOutcome::RefinementFailed;
        trace.detail = e.what();
      }
      if (trace.refined_queries.empty()) {
        ++state.failures;
      } else {
        auto candidate = accumulate(state, trace.refined_queries, trace);
        adaptive += static_cast<int>(trace.retrieved.size());
        if (!candidate) {
          trace.outcome = StepOutcome::EmptyCandidate;
          ++state.failures;
        } else {
          trace.candidate_note = candidate;
          trace.decision = decide(state, *candidate);
          if (!trace.decision) {
            trace.outcome = StepOutcome::DecisionUnparsed;
            trace.detail = "no status token in decision output";
          } else {
            trace.outcome = *trace.decision ? StepOutcome::Improved : StepOutcome::Rejected;
          }
          trace.best_updated = trace.decision.value_or(false);
        }
      }
      ++state.steps_executed;
      state.traces.push_back(std::move(trace));
      in_flight.reset();
    }
    std::string reference = state.best_note.text;
    return finish(std::move(state), std::move(reference), adaptive);
  } catch (const SessionAborted&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    if (in_flight) state.traces.push_back(std::move(*in_flight));
    throw SessionAborted(e.what(), std::move(state));
  }
}

AnswerResult NoteEngine::run_vanilla(std::string_view q0) {
  if (trim_copy(q0).empty()) throw ConfigError("question must be non-empty");
  SessionState state;
  state.q0 = std::string(q0);
  try {
    state.initial_retrieval = retriever_.search(q0, config_.top_k);
    std::string reference = format_refs(lookup(state.initial_retrieval));
    return finish(std::move(state), std::move(reference), 0);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw SessionAborted(e.what(), std::move(state));
  }
}

AnswerResult NoteEngine::run_init_only(std::string_view q0) {
  if (trim_copy(q0).empty()) throw ConfigError("question must be non-empty");
  SessionState state;
  state.q0 = std::string(q0);
  try {
    state = initialize_note(q0);
    std::string reference = state.best_note.text;
    return finish(std::move(state), std::move(reference), 0);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw SessionAborted(e.what(), std::move(state));
  }
}

}  // namespace deepnote

#include "deepnote/trace.hpp"

namespace deepnote {

using nlohmann::json;

json scored_to_json(const ScoredPassage& hit) {
  return {{"id", hit.passage_id}, {"score", hit.score}, {"rank", hit.rank}};
}

namespace {

json hits_to_json(const std::vector<ScoredPassage>& hits) {
  json out = json::array();
  for (const auto& h : hits) out.push_back(scored_to_json(h));
  return out;
}

json note_to_json(const Note& note) { return {{"text", note.text}, {"origin_step", note.origin_step}}; }

json iteration_to_json(const IterationTrace& t) {
  json retrieved = json::array();
  for (const auto& list : t.retrieved) retrieved.push_back(hits_to_json(list));
  json out = {
      {"step", t.step},
      {"refined_queries", t.refined_queries},
      {"retrieved", std::move(retrieved)},
      {"candidate_note", t.candidate_note ? note_to_json(*t.candidate_note) : json(nullptr)},
      {"decision", t.decision ? json(*t.decision) : json(nullptr)},
      {"outcome", std::string(to_string(t.outcome))},
      {"best_updated", t.best_updated},
  };
  if (!t.detail.empty()) out["detail"] = t.detail;
  return out;
}

}  // namespace

json state_to_json(const SessionState& state) {
  json iterations = json::array();
  for (const auto& t : state.traces) iterations.push_back(iteration_to_json(t));
  return {
      {"initial_retrieval", hits_to_json(state.initial_retrieval)},
      {"initial_note", state.initial_note.text.empty() ? json(nullptr) : note_to_json(state.initial_note)},
      {"best_note", state.best_note.text.empty() ? json(nullptr) : note_to_json(state.best_note)},
      {"query_log", state.query_log},
      {"iterations", std::move(iterations)},
      {"steps_executed", state.steps_executed},
      {"failures", state.failures},
  };
}

json trace_to_json(const TraceRecord& record) {
  json out = {{"id", record.id}, {"mode", record.mode}, {"question", record.question}};
  if (record.result) {
    const auto& r = *record.result;
    out["session"] = state_to_json(r.state);
    out["answer"] = r.answer;
    out["reference"] = r.reference;
    out["retrieval_count_adaptive"] = r.retrieval_count_adaptive;
    out["retrieval_count_total"] = r.retrieval_count_total;
  } else {
    out["session"] = record.partial ? state_to_json(*record.partial) : json(nullptr);
    out["answer"] = nullptr;
    out["reference"] = nullptr;
  }
  if (!record.error.empty()) out["error"] = record.error;
  return out;
}

}  // namespace deepnote

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepnote/corpus.hpp"
#include "deepnote/error.hpp"
#include "deepnote/llm.hpp"
#include "deepnote/prompt.hpp"
#include "deepnote/retriever.hpp"
#include "deepnote/scored_passage.hpp"

namespace deepnote {

struct EngineConfig {
  int top_k = 5;
  int max_step = 3;
  int max_failure = 2;
  int queries_per_refinement = 2;
  TaskStyle task_style = TaskStyle::Multihop;
  SamplingConfig sampling;
  std::string model;

  /// Throws ConfigError; in particular max_failure may not exceed max_step.
  void validate() const;
};

struct Note {
  std::string text;
  int origin_step = 0;

  friend bool operator==(const Note&, const Note&) = default;
};

/// Why an adaptive step did or did not improve the best note.
enum class StepOutcome {
  Improved,           // decision True
  Rejected,           // decision False
  DecisionUnparsed,   // no status token in the decision output
  RefinementFailed,   // no usable (novel, parseable) refined query
  EmptyCandidate,     // knowledge accumulation returned an empty note
};

std::string_view to_string(StepOutcome outcome);

struct IterationTrace {
  int step = 0;
  std::vector<std::string> refined_queries;
  std::vector<std::vector<ScoredPassage>> retrieved;  // one list per refined query
  std::optional<Note> candidate_note;
  std::optional<bool> decision;  // absent unless a status token was parsed
  StepOutcome outcome = StepOutcome::Rejected;
  bool best_updated = false;
  std::string detail;  // parse / refinement failure reason
};

struct SessionState {
  std::string q0;
  std::vector<std::string> query_log;
  Note best_note;
  Note initial_note;
  std::vector<ScoredPassage> initial_retrieval;
  int failures = 0;
  int steps_executed = 0;
  std::vector<IterationTrace> traces;
};

struct AnswerResult {
  std::string answer;
  Note final_best_note;
  std::string reference;  // text bound to {note} in the answer prompt
  SessionState state;
  int retrieval_count_adaptive = 0;
  int retrieval_count_total = 0;
};

/// Aborted session; carries everything recorded before the failure.
class SessionAborted : public Error {
 public:
  SessionAborted(const std::string& message, SessionState partial)
      : Error(message), partial_(std::move(partial)) {}
  const SessionState& partial() const noexcept { return partial_; }

 private:
  SessionState partial_;
};

/// Raised by refine_queries when no novel query survives; run() counts it as a
/// failed update.
class RefinementExhausted : public Error {
 public:
  using Error::Error;
};

/// Lowercase, drop ASCII punctuation, collapse whitespace.
std::string normalize_query(std::string_view query);

/// Merges per-query hits by passage id keeping each id's best score, ordered
/// by (score desc, id asc) and re-ranked from 1.
std::vector<ScoredPassage> merge_hits(const std::vector<std::vector<ScoredPassage>>& lists);

/// Note-centric adaptive retrieval.
///
/// A session initialises a note from the question's top-k passages, then
/// iterates refine -> accumulate -> decide until max_step steps have run or
/// max_failure updates have failed, and finally answers from the best note.
/// Sessions are sequential; one engine may serve many threads when the
/// retriever and backend are thread-safe.
class NoteEngine {
 public:
  NoteEngine(EngineConfig config, const Retriever& retriever, GenerationBackend& backend,
             const TemplateSet& templates = TemplateSet::builtin());

  const EngineConfig& config() const noexcept { return config_; }

  SessionState initialize_note(std::string_view q0);
  std::vector<std::string> refine_queries(SessionState& state);
  /// Retrieves for every query (recorded in `trace`), merges the hits and asks
  /// for an updated note. nullopt when the model returns nothing.
  std::optional<Note> accumulate(SessionState& state, const std::vector<std::string>& queries,
                                 IterationTrace& trace);
  /// Returns the parsed decision, or nullopt when no status token was found.
  /// Updates best note / failure count accordingly.
  std::optional<bool> decide(SessionState& state, const Note& candidate);

  AnswerResult run(std::string_view q0);
  /// One retrieval, passages straight into the answer prompt.
  AnswerResult run_vanilla(std::string_view q0);
  /// Initial note only, no adaptive steps.
  AnswerResult run_init_only(std::string_view q0);

  /// Answer prompt for `reference` under the configured task style.
  std::string render_answer_prompt(std::string_view q0, std::string_view reference) const;

 private:
  std::string generate(const std::string& prompt);
  std::vector<Passage> lookup(const std::vector<ScoredPassage>& hits) const;
  AnswerResult finish(SessionState state, std::string reference, int adaptive_retrievals);

  EngineConfig config_;
  const Retriever& retriever_;
  GenerationBackend& backend_;
  const TemplateSet& templates_;
};

}  // namespace deepnote

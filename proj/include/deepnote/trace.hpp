#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "deepnote/note_engine.hpp"

namespace deepnote {

/// Session trace record as written by `deepnote ask --trace-out` and
/// `deepnote eval --traces`; schema in docs/formats.md.
struct TraceRecord {
  std::string id;
  std::string mode;  // deepnote | vanilla | init-only
  std::string question;
  std::optional<AnswerResult> result;  // absent when the session aborted
  std::optional<SessionState> partial;
  std::string error;
};

nlohmann::json scored_to_json(const ScoredPassage& hit);
nlohmann::json state_to_json(const SessionState& state);
nlohmann::json trace_to_json(const TraceRecord& record);

}  // namespace deepnote

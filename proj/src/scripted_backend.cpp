#include <fstream>

#include <nlohmann/json.hpp>

#include "deepnote/llm.hpp"

namespace deepnote {

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : default_queue_(std::make_move_iterator(responses.begin()), std::make_move_iterator(responses.end())) {}

void ScriptedBackend::push(std::string response) {
  std::lock_guard lock(mutex_);
  default_queue_.push_back(std::move(response));
}

void ScriptedBackend::add_rule(std::string match, std::vector<std::string> responses) {
  if (match.empty()) throw ConfigError("scripted rule needs a non-empty match string");
  std::lock_guard lock(mutex_);
  for (auto& rule : rules_) {
    if (rule.match == match) {
      for (auto& r : responses) rule.responses.push_back(std::move(r));
      return;
    }
  }
  rules_.push_back(Rule{std::move(match), {std::make_move_iterator(responses.begin()),
                                           std::make_move_iterator(responses.end())}});
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  std::deque<std::string>* queue = &default_queue_;
  std::string owner = "default queue";
  for (auto& rule : rules_) {
    if (request.user_prompt.find(rule.match) != std::string::npos) {
      queue = &rule.responses;
      owner = "rule \"" + rule.match + "\"";
      break;
    }
  }
  if (queue->empty()) {
    throw BackendError(BackendErrorKind::ScriptExhausted, "scripted backend exhausted (" + owner + ")");
  }
  std::string response = std::move(queue->front());
  queue->pop_front();
  consumed_.push_back(request.user_prompt);
  return response;
}

std::vector<std::string> ScriptedBackend::consumed_prompts() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  std::size_t n = default_queue_.size();
  for (const auto& rule : rules_) n += rule.responses.size();
  return n;
}

void ScriptedBackend::load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open script " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto record = nlohmann::json::parse(line);
      auto response = record.at("response").get<std::string>();
      auto match = record.value("match", std::string());
      if (match.empty()) {
        push(std::move(response));
      } else {
        add_rule(std::move(match), {std::move(response)});
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad script record: ") + e.what(), line_no);
    }
  }
}

std::string scripted_complete(ScriptedBackend& backend, const ChatRequest& request) {
  return backend.complete(request);
}

}  // namespace deepnote

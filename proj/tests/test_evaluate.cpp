#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <random>

#include "deepnote/evaluate.hpp"
#include "truth_table.hpp"

using namespace deepnote;

namespace {

// Answers depend only on the prompt, so results are independent of thread
// scheduling.
class KeyedBackend : public GenerationBackend {
 public:
  std::map<std::string, std::string> answers;  // question -> answer
  std::string fail_on;

  std::string complete(const ChatRequest& r) override {
    const auto& p = r.user_prompt;
    if (p.find("Question to be answered:") != std::string::npos) return "Initial note.";
    if (p.find("Existing question list:") != std::string::npos) return "1. Oder river towns\n2. Baltic ports";
    if (p.find("Retrieved document:") != std::string::npos) return "Candidate note.";
    if (p.find("Provided Note 2:") != std::string::npos) return R"({"status":"True"})";
    for (const auto& [q, a] : answers) {
      if (p.find("Question: " + q) != std::string::npos) {
        if (q == fail_on) throw BackendError(BackendErrorKind::Timeout, "simulated timeout");
        return a;
      }
    }
    return "no idea";
  }
};

std::vector<QaExample> dataset() {
  return {{"e1", "Which city lies on the Oder?", {"Szczecin"}, {}},
          {"e2", "Which sea does the Oder reach?", {"Baltic Sea"}, {}},
          {"e3", "What is Szczecin called in German?", {"Stettin"}, {}},
          {"e4", "Which country borders the Baltic?", {"Poland"}, {}}};
}

KeyedBackend backend() {
  KeyedBackend b;
  b.answers = {{"Which city lies on the Oder?", "Szczecin"},
               {"Which sea does the Oder reach?", "the Baltic Sea"},
               {"What is Szczecin called in German?", "Berlin"},
               {"Which country borders the Baltic?", "Poland and Germany"}};
  return b;
}

EvalConfig config(EvalMode mode, int parallelism) {
  EvalConfig c;
  c.mode = mode;
  c.parallelism = parallelism;
  c.engine.top_k = 2;
  c.engine.max_step = 2;
  c.engine.max_failure = 1;
  return c;
}

}  // namespace

TEST(Evaluate, AggregatesAreMeansTimesHundred) {
  auto retriever = deepnote::testing::truth_retriever();
  auto b = backend();
  auto report = evaluate(config(EvalMode::Vanilla, 2), dataset(), *retriever, b);
  ASSERT_EQ(report.rows.size(), 4u);
  // em: 1, 1, 0, 0   acc: 1, 1, 0, 1   f1: 1, 1, 0, 1/2 (poland|and|germany)
  EXPECT_DOUBLE_EQ(report.aggregates.at("em"), 50.0);
  EXPECT_DOUBLE_EQ(report.aggregates.at("acc"), 75.0);
  EXPECT_DOUBLE_EQ(report.aggregates.at("f1"), 62.5);
  EXPECT_EQ(report.errors, 0);
  EXPECT_DOUBLE_EQ(report.retrieval.mean_total, 1.0);
  EXPECT_EQ(format_summary(report), "vanilla multihop n=4 acc=75.0 f1=62.5 em=50.0 retrievals(adaptive)=0.00");
}

TEST(Evaluate, RowsKeepDatasetOrderAndAggregatesIgnoreIt) {
  auto retriever = deepnote::testing::truth_retriever();
  auto b = backend();
  auto base = evaluate(config(EvalMode::DeepNote, 1), dataset(), *retriever, b);
  auto shuffled = dataset();
  std::mt19937 rng(5);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto report = evaluate(config(EvalMode::DeepNote, 3), shuffled, *retriever, b);
    for (std::size_t i = 0; i < shuffled.size(); ++i) EXPECT_EQ(report.rows[i].id, shuffled[i].id);
    EXPECT_EQ(report.aggregates, base.aggregates);  // bitwise
    EXPECT_EQ(report.retrieval.mean_adaptive, base.retrieval.mean_adaptive);
  }
}

TEST(Evaluate, DeepNoteRetrievalCounts) {
  auto retriever = deepnote::testing::truth_retriever();
  auto b = backend();
  // step 1 improves with two fresh queries; step 2 proposes the same queries
  // again, which is a failed update and ends the session
  auto report = evaluate(config(EvalMode::DeepNote, 4), dataset(), *retriever, b);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.retrieval_count_adaptive, 2) << row.id;
    EXPECT_EQ(row.retrieval_count_total, 3) << row.id;
  }
  EXPECT_EQ(report.retrieval.max_adaptive, 2);
}

TEST(Evaluate, ExampleFailureBecomesZeroRow) {
  auto retriever = deepnote::testing::truth_retriever();
  auto b = backend();
  b.fail_on = "Which sea does the Oder reach?";
  std::vector<std::string> seen;
  std::mutex m;
  auto report = evaluate(config(EvalMode::InitOnly, 2), dataset(), *retriever, b, TemplateSet::builtin(),
                         [&](const EvalRow& row, const TraceRecord& trace) {
                           std::lock_guard lock(m);
                           seen.push_back(row.id);
                           if (row.id == "e2") {
                             EXPECT_FALSE(trace.result.has_value());
                             EXPECT_FALSE(trace.error.empty());
                           }
                         });
  EXPECT_EQ(report.errors, 1);
  ASSERT_TRUE(report.rows[1].error.has_value());
  EXPECT_EQ(report.rows[1].metrics.at("em"), 0.0);
  EXPECT_DOUBLE_EQ(report.aggregates.at("em"), 25.0);
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<std::string>{"e1", "e2", "e3", "e4"}));
  EXPECT_EQ(row_to_json(report.rows[1]).at("metrics").at("acc"), 0.0);
  EXPECT_EQ(summary_to_json(report).at("errors"), 1);
}

TEST(Evaluate, RejectsBadConfig) {
  auto retriever = deepnote::testing::truth_retriever();
  auto b = backend();
  EXPECT_THROW(evaluate(config(EvalMode::Vanilla, 0), dataset(), *retriever, b), ConfigError);
  EXPECT_THROW(evaluate(config(EvalMode::Vanilla, 1), {}, *retriever, b), ConfigError);
  EXPECT_EQ(parse_eval_mode("init-only"), EvalMode::InitOnly);
  EXPECT_THROW(parse_eval_mode("fancy"), ConfigError);
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepnote/corpus.hpp"
#include "dnalign_fixture.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string fixture(const std::string& name) { return std::string(DEEPNOTE_FIXTURE_DIR) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("deepnote_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  CliResult run(const std::string& args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string(DEEPNOTE_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string build_index() {
    const auto index = (dir / "index.jsonl").string();
    auto r = run("index --corpus " + fixture("corpus.jsonl") + " --out " + index);
    EXPECT_EQ(r.code, 0) << r.err;
    return index;
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, IndexReportsStatistics) {
  auto r = run("index --corpus " + fixture("corpus.jsonl") + " --out " + (dir / "i.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("docs=6 ", 0), 0u) << r.out;
  auto lines = read_jsonl(dir / "i.jsonl");
  EXPECT_EQ(lines.front().at("format"), "deepnote-index");
}

TEST_F(Cli, AskWithScriptedBackendWritesTrace) {
  const auto index = build_index();
  const auto trace = (dir / "trace.jsonl").string();
  auto r = run("ask --index " + index + " --question 'Which river flows through the city once called Stettin?'" +
               " --backend scripted --script " + fixture("ask_script.jsonl") +
               " --max-step 1 --max-failure 1 --trace-out " + trace);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "Oder\n");
  EXPECT_NE(r.err.find("# effective config: ask"), std::string::npos);
  auto t = read_jsonl(trace);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].at("answer"), "Oder");
  EXPECT_EQ(t[0].at("session").at("steps_executed"), 1);
  EXPECT_EQ(t[0].at("retrieval_count_adaptive"), 2);
}

TEST_F(Cli, ConfigFileAppliesAndFlagsOverride) {
  const auto index = build_index();
  auto r = run("--config " + fixture("ask.toml") + " ask --index " + index +
               " --question 'Which river?' --script " + fixture("ask_script.jsonl") + " --top-k 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("top-k=3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("max-step=1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("backend=\"scripted\""), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrorsExitTwo) {
  const auto index = build_index();
  EXPECT_EQ(run("ask --index " + index + " --question q --max-step 1 --max-failure 2").code, 2);
  EXPECT_EQ(run("ask --index " + index).code, 2);  // missing --question
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("eval --index " + index + " --dataset x --mode turbo").code, 2);
  EXPECT_EQ(run("ask --index " + index + " --question q --backend scripted").code, 2);  // no --script
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("ask --index " + (dir / "missing.jsonl").string() + " --question q").code, 1);
  const auto index = build_index();
  const auto trace = (dir / "t.jsonl").string();
  auto r = run("ask --index " + index + " --question 'Which river?' --base-url http://127.0.0.1:9" +
               " --max-retries 0 --timeout 2 --trace-out " + trace);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("session aborted"), std::string::npos) << r.err;
  auto t = read_jsonl(trace);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t[0].contains("error"));
}

TEST_F(Cli, EvalWritesReportAndTraces) {
  const auto index = build_index();
  const auto report = (dir / "report.jsonl").string();
  const auto traces = (dir / "traces.jsonl").string();
  auto r = run("eval --index " + index + " --dataset " + fixture("questions.jsonl") +
               " --mode vanilla --parallel 1 --backend scripted --script " + fixture("vanilla_script.jsonl") +
               " --report " + report + " --traces " + traces);
  ASSERT_EQ(r.code, 0) << r.err;
  // em 1, 0, 1   acc 1, 0, 1   f1 1, 1/2, 1
  EXPECT_EQ(r.out, "vanilla multihop n=3 acc=66.7 f1=83.3 em=66.7 retrievals(adaptive)=0.00\n");
  auto lines = read_jsonl(report);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].at("type"), "summary");
  EXPECT_NEAR(lines[0].at("aggregates").at("f1").get<double>(), 250.0 / 3.0, 1e-9);
  EXPECT_EQ(lines[2].at("id"), "h2");
  EXPECT_EQ(lines[2].at("pred"), "North Sea");
  EXPECT_EQ(read_jsonl(traces).size(), 3u);
}

TEST_F(Cli, DensityFromAskTrace) {
  const auto index = build_index();
  const auto trace = (dir / "trace.jsonl").string();
  ASSERT_EQ(run("ask --index " + index + " --question 'Which river?' --backend scripted --script " +
                fixture("ask_script.jsonl") + " --max-step 1 --max-failure 1 --trace-out " + trace)
                .code,
            0);
  const auto out = (dir / "density.jsonl").string();
  auto r = run("density --traces " + trace + " --out " + out + " --backend scripted --script " +
               fixture("density_script.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  // reference note has 15 tokens, the quoted sentence 8
  EXPECT_EQ(r.out, "records=1 mean_density=0.5333 mean_reference_tokens=15.0\n");
  auto lines = read_jsonl(out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].at("evidence_tokens"), 8);
  EXPECT_EQ(lines[1].at("type"), "summary");

  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  EXPECT_EQ(run("density --traces " + (dir / "bad.jsonl").string() + " --out " + out +
                " --backend scripted --script " + fixture("density_script.jsonl"))
                .code,
            1);
}

TEST_F(Cli, DpoBuildMatchesLibraryFixture) {
  {
    std::ofstream corpus(dir / "corpus.jsonl");
    for (const auto& p : deepnote::testing::dnalign_corpus()) {
      corpus << json{{"id", p.id}, {"title", p.title}, {"text", p.text}}.dump() << '\n';
    }
    std::ofstream qs(dir / "qs.jsonl");
    for (const auto& q : deepnote::testing::dnalign_questions()) {
      qs << json{{"id", q.id}, {"question", q.question}, {"answers", q.gold_answers}}.dump() << '\n';
    }
    std::ofstream script(dir / "script.jsonl");
    for (const auto& [m, resp] : deepnote::testing::dnalign_script()) {
      script << json{{"match", m}, {"response", resp}}.dump() << '\n';
    }
  }
  const auto index = (dir / "index.jsonl").string();
  ASSERT_EQ(run("index --corpus " + (dir / "corpus.jsonl").string() + " --out " + index).code, 0);
  const auto out = (dir / "pairs.jsonl").string();
  auto r = run("dpo-build --index " + index + " --dataset " + (dir / "qs.jsonl").string() +
               " --stage all --seed 7 --model policy --judge-model judge --backend scripted --script " +
               (dir / "script.jsonl").string() + " --out " + out);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "init=4 qr=3 ka=3 ans=4 total=14\n");
  EXPECT_EQ(slurp(out), deepnote::testing::run_dnalign_fixture(7).jsonl);
  EXPECT_NE(r.err.find("skipped init q5"), std::string::npos);
}

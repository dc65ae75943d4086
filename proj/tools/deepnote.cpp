// deepnote: command-line driver for indexing, question answering, batch
// evaluation, knowledge-density analysis and preference-data construction.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deepnote/bm25.hpp"
#include "deepnote/corpus.hpp"
#include "deepnote/density.hpp"
#include "deepnote/dnalign.hpp"
#include "deepnote/evaluate.hpp"
#include "deepnote/llm.hpp"
#include "deepnote/note_engine.hpp"
#include "deepnote/retriever.hpp"
#include "deepnote/trace.hpp"

namespace {

using namespace deepnote;
using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct BackendOptions {
  std::string kind = "http";
  std::string script;
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "DEEPNOTE_API_KEY";
  int max_retries = 3;
  int backoff_ms = 500;
  int timeout_s = 120;
  double requests_per_minute = 0.0;
  double temperature = 0.1;
  double top_p = 1.0;
  int max_tokens = 1024;
  std::string prompt_dir;
};

struct RetrieverOptions {
  std::string index;
  std::string kind = "bm25";
  std::size_t hash_dim = 256;
  std::string embed_base_url = "https://api.openai.com";
  std::string embed_model = "bge-base-en-v1.5";
};

struct EngineOptions {
  std::string task = "multihop";
  int top_k = 5;
  int max_step = 3;
  int max_failure = 2;
  int queries_per_refinement = 2;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.kind, "Generation backend")->check(CLI::IsMember({"http", "scripted"}));
  cmd->add_option("--script", o.script, "Scripted backend responses (JSON lines)");
  cmd->add_option("--base-url", o.base_url, "Chat-completion endpoint base URL");
  cmd->add_option("--model", o.model, "Model name sent to the endpoint");
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--max-retries", o.max_retries, "Retries on timeouts, 429 and 5xx")->check(CLI::NonNegativeNumber);
  cmd->add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", o.timeout_s, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--rpm", o.requests_per_minute, "Rate limit in requests per minute (0 = off)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--temperature", o.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
  cmd->add_option("--top-p", o.top_p, "Nucleus sampling mass")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--max-tokens", o.max_tokens, "Completion token limit")->check(CLI::PositiveNumber);
  cmd->add_option("--prompt-dir", o.prompt_dir, "Directory overriding the built-in prompt templates");
}

void add_retriever_options(CLI::App* cmd, RetrieverOptions& o, bool required_index = true) {
  auto* opt = cmd->add_option("--index", o.index, "Index file written by `deepnote index`");
  if (required_index) opt->required();
  cmd->add_option("--retriever", o.kind, "Retriever over the indexed corpus")
      ->check(CLI::IsMember({"bm25", "dense-hash", "dense-http"}));
  cmd->add_option("--hash-dim", o.hash_dim, "Dimension of the hashing embedder")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--embed-base-url", o.embed_base_url, "Embeddings endpoint base URL");
  cmd->add_option("--embed-model", o.embed_model, "Embedding model name");
}

void add_engine_options(CLI::App* cmd, EngineOptions& o) {
  cmd->add_option("--task", o.task, "Task style")->check(CLI::IsMember({"multihop", "longform", "shortform"}));
  cmd->add_option("--top-k", o.top_k, "Passages per retrieval")->check(CLI::PositiveNumber);
  cmd->add_option("--max-step", o.max_step, "Adaptive step ceiling")->check(CLI::PositiveNumber);
  cmd->add_option("--max-failure", o.max_failure, "Failed-update ceiling")->check(CLI::PositiveNumber);
  cmd->add_option("--queries-per-refinement", o.queries_per_refinement, "Refined queries per step")
      ->check(CLI::PositiveNumber);
}

SamplingConfig sampling_of(const BackendOptions& o) { return SamplingConfig{o.temperature, o.top_p, o.max_tokens}; }

// Owns whichever backend the options select.
struct BackendHandle {
  std::unique_ptr<ScriptedBackend> scripted;
  std::unique_ptr<HttpBackend> http;
  GenerationBackend& get() { return scripted ? static_cast<GenerationBackend&>(*scripted) : *http; }
};

BackendHandle make_backend(const BackendOptions& o) {
  BackendHandle h;
  if (o.kind == "scripted") {
    if (o.script.empty()) throw ConfigError("--backend scripted needs --script");
    h.scripted = std::make_unique<ScriptedBackend>();
    h.scripted->load_script(o.script);
  } else {
    HttpEndpointConfig cfg;
    cfg.base_url = o.base_url;
    cfg.api_key_env = o.api_key_env;
    cfg.max_retries = o.max_retries;
    cfg.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
    cfg.timeout = std::chrono::seconds(o.timeout_s);
    cfg.requests_per_minute = o.requests_per_minute;
    h.http = std::make_unique<HttpBackend>(cfg);
  }
  return h;
}

const TemplateSet& templates_for(const BackendOptions& o, std::unique_ptr<TemplateSet>& storage) {
  if (o.prompt_dir.empty()) return TemplateSet::builtin();
  storage = std::make_unique<TemplateSet>(TemplateSet::load_dir(o.prompt_dir));
  return *storage;
}

struct LoadedRetriever {
  std::shared_ptr<const Corpus> corpus;
  std::unique_ptr<Retriever> retriever;
};

LoadedRetriever load_retriever(const RetrieverOptions& o) {
  auto bundle = load_index_bundle(o.index);
  LoadedRetriever out;
  out.corpus = std::make_shared<const Corpus>(std::move(bundle.corpus));
  if (o.kind == "bm25") {
    out.retriever = std::make_unique<Bm25Retriever>(out.corpus, std::make_shared<const Bm25Index>(std::move(bundle.index)));
  } else if (o.kind == "dense-hash") {
    out.retriever = std::make_unique<DenseRetriever>(out.corpus, std::make_shared<HashingEmbedder>(o.hash_dim));
  } else {
    EmbeddingEndpointConfig cfg;
    cfg.base_url = o.embed_base_url;
    cfg.model = o.embed_model;
    out.retriever = std::make_unique<DenseRetriever>(out.corpus, std::make_shared<HttpEmbeddingProvider>(cfg));
  }
  return out;
}

EngineConfig engine_config(const EngineOptions& e, const BackendOptions& b) {
  EngineConfig cfg;
  cfg.task_style = parse_task_style(e.task);
  cfg.top_k = e.top_k;
  cfg.max_step = e.max_step;
  cfg.max_failure = e.max_failure;
  cfg.queries_per_refinement = e.queries_per_refinement;
  cfg.sampling = sampling_of(b);
  cfg.model = b.model;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// --- index -----------------------------------------------------------------

struct IndexArgs {
  std::string corpus;
  std::string out;
  double k1 = 1.2;
  double b = 0.75;
};

int cmd_index(const IndexArgs& a) {
  auto corpus = load_corpus(a.corpus);
  auto index = Bm25Index::build(corpus, Bm25Params{a.k1, a.b});
  save_index_bundle(a.out, corpus, index);
  std::cout << "docs=" << corpus.doc_count() << " avg_doc_len=" << corpus.avg_doc_len()
            << " terms=" << index.term_count() << '\n';
  return 0;
}

// --- ask -------------------------------------------------------------------

struct AskArgs {
  RetrieverOptions retriever;
  EngineOptions engine;
  BackendOptions backend;
  std::string question;
  std::string trace_out;
  std::string mode = "deepnote";
};

int cmd_ask(const AskArgs& a) {
  auto cfg = engine_config(a.engine, a.backend);
  const auto mode = parse_eval_mode(a.mode);
  auto loaded = load_retriever(a.retriever);
  auto backend = make_backend(a.backend);
  std::unique_ptr<TemplateSet> tmpl_storage;
  NoteEngine engine(cfg, *loaded.retriever, backend.get(), templates_for(a.backend, tmpl_storage));

  TraceRecord record;
  record.id = "ask";
  record.mode = a.mode;
  record.question = a.question;
  int code = 0;
  try {
    record.result = mode == EvalMode::DeepNote  ? engine.run(a.question)
                    : mode == EvalMode::Vanilla ? engine.run_vanilla(a.question)
                                                : engine.run_init_only(a.question);
    std::cout << record.result->answer << '\n';
    std::cerr << "steps=" << record.result->state.steps_executed << " failures=" << record.result->state.failures
              << " retrievals_adaptive=" << record.result->retrieval_count_adaptive << '\n';
  } catch (const SessionAborted& e) {
    record.error = e.what();
    record.partial = e.partial();
    std::cerr << "error: session aborted: " << e.what() << '\n';
    code = kExitRuntime;
  }
  if (!a.trace_out.empty()) {
    auto out = open_output(a.trace_out);
    out << trace_to_json(record).dump() << '\n';
  }
  return code;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  RetrieverOptions retriever;
  EngineOptions engine;
  BackendOptions backend;
  std::string dataset;
  std::string mode = "deepnote";
  int parallel = 4;
  std::string report;
  std::string traces;
};

int cmd_eval(const EvalArgs& a) {
  EvalConfig cfg;
  cfg.engine = engine_config(a.engine, a.backend);
  cfg.mode = parse_eval_mode(a.mode);
  cfg.parallelism = a.parallel;
  auto dataset = load_dataset(a.dataset, cfg.engine.task_style);
  auto loaded = load_retriever(a.retriever);
  auto backend = make_backend(a.backend);
  std::unique_ptr<TemplateSet> tmpl_storage;
  const auto& templates = templates_for(a.backend, tmpl_storage);

  std::ofstream traces;
  if (!a.traces.empty()) traces = open_output(a.traces);
  TraceSink sink;
  if (traces.is_open()) {
    sink = [&traces](const EvalRow&, const TraceRecord& record) { traces << trace_to_json(record).dump() << '\n'; };
  }
  auto report = evaluate(cfg, dataset, *loaded.retriever, backend.get(), templates, sink);
  if (!a.report.empty()) {
    auto out = open_output(a.report);
    out << summary_to_json(report).dump() << '\n';
    for (const auto& row : report.rows) out << row_to_json(row).dump() << '\n';
  }
  std::cout << format_summary(report) << '\n';
  return 0;
}

// --- dpo-build -------------------------------------------------------------

struct DpoArgs {
  RetrieverOptions retriever;
  BackendOptions backend;
  std::string dataset;
  std::string task = "multihop";
  std::string stage = "all";
  std::uint64_t seed = 0;
  std::string out;
  std::string judge_model = "gpt-4o-mini";
  int fanout = 1;
};

int cmd_dpo_build(const DpoArgs& a) {
  BuilderConfig cfg;
  cfg.task_style = parse_task_style(a.task);
  cfg.seed = a.seed;
  cfg.model = a.backend.model;
  cfg.judge_model = a.judge_model;
  cfg.grid.max_tokens = a.backend.max_tokens;
  cfg.fanout = a.fanout;
  auto dataset = load_dataset(a.dataset, cfg.task_style);
  auto loaded = load_retriever(a.retriever);
  auto backend = make_backend(a.backend);
  std::unique_ptr<TemplateSet> tmpl_storage;
  DnAlignBuilder builder(cfg, *loaded.retriever, backend.get(), backend.get(), templates_for(a.backend, tmpl_storage));

  // Earlier stages run when a later one is requested, but only the requested
  // stage is written.
  std::vector<PreferencePair> pairs;
  if (a.stage == "all") {
    pairs = builder.build_all(dataset);
  } else {
    const Stage target = parse_stage(a.stage);
    if (target == Stage::Ans) {
      pairs = builder.build_ans_pairs(dataset);
    } else {
      pairs = builder.build_init_pairs(dataset);
      if (target != Stage::Init) pairs = builder.build_qr_pairs(dataset);
      if (target == Stage::KA) pairs = builder.build_ka_pairs(dataset);
    }
  }

  auto out = open_output(a.out);
  std::map<std::string, int> counts{{"init", 0}, {"qr", 0}, {"ka", 0}, {"ans", 0}};
  for (const auto& p : pairs) {
    out << pair_to_json(p).dump() << '\n';
    ++counts[std::string(to_string(p.stage))];
  }
  for (const auto& s : builder.skipped()) {
    std::cerr << "skipped " << to_string(s.stage) << " " << s.example_id << ": " << s.reason << '\n';
  }
  std::cout << "init=" << counts["init"] << " qr=" << counts["qr"] << " ka=" << counts["ka"]
            << " ans=" << counts["ans"] << " total=" << pairs.size() << '\n';
  return 0;
}

// --- density ---------------------------------------------------------------

struct DensityArgs {
  BackendOptions backend;
  std::string traces;
  std::string out;
  std::size_t min_clip_run = 3;
};

int cmd_density(const DensityArgs& a) {
  std::ifstream in(a.traces, std::ios::binary);
  if (!in) throw DataError("cannot open " + a.traces);
  auto backend = make_backend(a.backend);
  std::unique_ptr<TemplateSet> tmpl_storage;
  const auto& templates = templates_for(a.backend, tmpl_storage);
  DensityConfig cfg;
  cfg.sampling = sampling_of(a.backend);
  cfg.model = a.backend.model;
  cfg.min_clip_run = a.min_clip_run;

  std::vector<json> rows;
  double density_sum = 0.0, ref_tokens_sum = 0.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed trace: ") + e.what(), line_no);
    }
    if (!record.is_object() || !record.contains("question") || !record["question"].is_string()) {
      throw DataError("trace record has no question", line_no);
    }
    if (!record.contains("reference") || !record["reference"].is_string()) {
      std::cerr << "skipping line " << line_no << ": session has no reference (aborted)\n";
      continue;
    }
    auto d = knowledge_density(backend.get(), cfg, record["question"].get<std::string>(),
                               record["reference"].get<std::string>(), templates);
    rows.push_back({{"id", record.value("id", "")},
                    {"mode", record.value("mode", "")},
                    {"reference_tokens", d.reference_tokens},
                    {"evidence_tokens", d.evidence_tokens},
                    {"density", d.density}});
    density_sum += d.density;
    ref_tokens_sum += static_cast<double>(d.reference_tokens);
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  json summary = {{"type", "summary"},
                  {"records", rows.size()},
                  {"mean_density", density_sum / n},
                  {"mean_reference_tokens", ref_tokens_sum / n}};
  auto out = open_output(a.out);
  for (const auto& r : rows) out << r.dump() << '\n';
  out << summary.dump() << '\n';
  std::ostringstream msg;
  msg.setf(std::ios::fixed);
  msg.precision(4);
  msg << "records=" << rows.size() << " mean_density=" << density_sum / n;
  msg.precision(1);
  msg << " mean_reference_tokens=" << ref_tokens_sum / n;
  std::cout << msg.str() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Note-centric adaptive retrieval-augmented QA"};
  app.set_config("--config", "", "TOML/INI config file; flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Build and persist a BM25 index");
  index_cmd->add_option("--corpus", index_args.corpus, "Corpus JSON lines")->required();
  index_cmd->add_option("--out", index_args.out, "Index output file")->required();
  index_cmd->add_option("--k1", index_args.k1, "BM25 k1")->check(CLI::NonNegativeNumber);
  index_cmd->add_option("--b", index_args.b, "BM25 b")->check(CLI::Range(0.0, 1.0));

  AskArgs ask_args;
  auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
  add_retriever_options(ask_cmd, ask_args.retriever);
  add_engine_options(ask_cmd, ask_args.engine);
  add_backend_options(ask_cmd, ask_args.backend);
  ask_cmd->add_option("--question", ask_args.question, "Question to answer")->required();
  ask_cmd->add_option("--mode", ask_args.mode, "Pipeline")->check(CLI::IsMember({"deepnote", "vanilla", "init-only"}));
  ask_cmd->add_option("--trace-out", ask_args.trace_out, "Write the session trace (JSON line)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a dataset");
  add_retriever_options(eval_cmd, eval_args.retriever);
  add_engine_options(eval_cmd, eval_args.engine);
  add_backend_options(eval_cmd, eval_args.backend);
  eval_cmd->add_option("--dataset", eval_args.dataset, "Dataset JSON lines")->required();
  eval_cmd->add_option("--mode", eval_args.mode, "Pipeline")->check(CLI::IsMember({"deepnote", "vanilla", "init-only"}));
  eval_cmd->add_option("--parallel", eval_args.parallel, "Concurrent sessions")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--report", eval_args.report, "Report output (summary + rows)");
  eval_cmd->add_option("--traces", eval_args.traces, "Session traces output");

  DpoArgs dpo_args;
  auto* dpo_cmd = app.add_subcommand("dpo-build", "Construct preference pairs");
  add_retriever_options(dpo_cmd, dpo_args.retriever);
  add_backend_options(dpo_cmd, dpo_args.backend);
  dpo_cmd->add_option("--dataset", dpo_args.dataset, "Dataset JSON lines")->required();
  dpo_cmd->add_option("--task", dpo_args.task, "Task style")
      ->check(CLI::IsMember({"multihop", "longform", "shortform"}));
  dpo_cmd->add_option("--stage", dpo_args.stage, "Stage to emit")
      ->check(CLI::IsMember({"init", "qr", "ka", "ans", "all"}));
  dpo_cmd->add_option("--seed", dpo_args.seed, "Seed for pool sampling");
  dpo_cmd->add_option("--out", dpo_args.out, "Preference records output")->required();
  dpo_cmd->add_option("--judge-model", dpo_args.judge_model, "Model used for judging");
  dpo_cmd->add_option("--fanout", dpo_args.fanout, "Concurrent candidate generations")->check(CLI::PositiveNumber);

  DensityArgs density_args;
  auto* density_cmd = app.add_subcommand("density", "Knowledge density of session references");
  add_backend_options(density_cmd, density_args.backend);
  density_cmd->add_option("--traces", density_args.traces, "Traces from ask/eval")->required();
  density_cmd->add_option("--out", density_args.out, "Density records output")->required();
  density_cmd->add_option("--min-clip-run", density_args.min_clip_run, "Shortest clipped verbatim run")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto* sub : app.get_subcommands()) {
    std::cerr << "# effective config: " << sub->get_name() << '\n' << sub->config_to_str(true, false);
  }

  try {
    if (*index_cmd) return cmd_index(index_args);
    if (*ask_cmd) return cmd_ask(ask_args);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*dpo_cmd) return cmd_dpo_build(dpo_args);
    if (*density_cmd) return cmd_density(density_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

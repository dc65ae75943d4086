#include "deepnote/dnalign.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <random>

#include "deepnote/metrics.hpp"
#include "deepnote/note_engine.hpp"

namespace deepnote {
namespace {

using nlohmann::json;

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

json sampling_json(const SamplingConfig& s) { return {{"temperature", s.temperature}, {"top_p", s.top_p}}; }

}  // namespace

std::vector<SamplingConfig> SamplingGrid::configs() const {
  std::vector<SamplingConfig> out;
  for (double t : temperatures) {
    for (double p : top_ps) out.push_back(SamplingConfig{t, p, max_tokens});
  }
  return out;
}

void SamplingGrid::validate() const {
  if (temperatures.empty() || top_ps.empty()) throw ConfigError("sampling grid is empty");
  if (top_ks.empty()) throw ConfigError("sampling grid needs at least one top-k");
  for (int k : top_ks) {
    if (k < 1) throw ConfigError("grid top-k must be >= 1");
  }
  for (const auto& c : configs()) c.validate();
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Init:
      return "init";
    case Stage::QR:
      return "qr";
    case Stage::KA:
      return "ka";
    case Stage::Ans:
      return "ans";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  if (name == "init") return Stage::Init;
  if (name == "qr") return Stage::QR;
  if (name == "ka") return Stage::KA;
  if (name == "ans") return Stage::Ans;
  throw ConfigError("unknown stage \"" + std::string(name) + "\"");
}

json pair_to_json(const PreferencePair& pair) {
  return {{"stage", std::string(to_string(pair.stage))},
          {"prompt", pair.input_x},
          {"chosen", pair.chosen},
          {"rejected", pair.rejected},
          {"meta", pair.meta}};
}

DnAlignBuilder::DnAlignBuilder(BuilderConfig config, const Retriever& retriever, GenerationBackend& generator,
                               GenerationBackend& judge, const TemplateSet& templates)
    : config_(std::move(config)), retriever_(retriever), generator_(generator), judge_(judge), templates_(templates) {
  config_.grid.validate();
  config_.judge_sampling.validate();
  if (config_.queries_per_refinement < 1) throw ConfigError("queries_per_refinement must be >= 1");
  if (config_.fanout < 1) throw ConfigError("fanout must be >= 1");
}

int DnAlignBuilder::top_k_for(std::size_t index) const {
  return config_.grid.top_ks[index % config_.grid.top_ks.size()];
}

std::uint64_t DnAlignBuilder::example_seed(Stage stage, std::size_t index) const {
  return splitmix64(config_.seed ^ splitmix64(static_cast<std::uint64_t>(stage) * 1000003ULL + index));
}

void DnAlignBuilder::skip(Stage stage, const std::string& id, std::string reason) {
  skipped_.push_back(SkipRecord{stage, id, std::move(reason)});
}

std::vector<Passage> DnAlignBuilder::retrieve(std::string_view query, int k) const {
  std::vector<Passage> out;
  for (const auto& hit : retriever_.search(query, k)) out.push_back(retriever_.passage(hit.passage_id));
  return out;
}

std::vector<DnAlignBuilder::Candidate> DnAlignBuilder::generate_candidates(const std::string& prompt) {
  const auto grid = config_.grid.configs();
  std::vector<std::string> texts(grid.size());
  auto call = [&](std::size_t i) {
    return generator_.complete(ChatRequest{prompt, grid[i], config_.model});
  };
  if (config_.fanout <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) texts[i] = call(i);
  } else {
    const auto width = static_cast<std::size_t>(config_.fanout);
    for (std::size_t start = 0; start < grid.size(); start += width) {
      std::vector<std::future<std::string>> batch;
      for (std::size_t i = start; i < std::min(grid.size(), start + width); ++i) {
        batch.push_back(std::async(std::launch::async, call, i));
      }
      for (std::size_t j = 0; j < batch.size(); ++j) texts[start + j] = batch[j].get();
    }
  }
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto text = trim_copy(texts[i]);
    if (!text.empty()) out.push_back(Candidate{std::move(text), grid[i], i});
  }
  return out;
}

std::string DnAlignBuilder::judge(const std::string& prompt) {
  return judge_.complete(ChatRequest{prompt, config_.judge_sampling, config_.judge_model});
}

namespace {

bool all_identical(const std::vector<std::string>& texts) {
  return std::all_of(texts.begin(), texts.end(), [&](const std::string& t) { return t == texts.front(); });
}

std::vector<std::string> texts_of(const auto& candidates) {
  std::vector<std::string> out;
  for (const auto& c : candidates) out.push_back(c.text);
  return out;
}

json candidate_meta(const auto& c) {
  return {{"grid_index", c.grid_index}, {"sampling", sampling_json(c.sampling)}};
}

}  // namespace

std::vector<PreferencePair> DnAlignBuilder::build_init_pairs(const std::vector<QaExample>& examples) {
  std::vector<PreferencePair> pairs;
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    const auto& ex = examples[idx];
    const int k = top_k_for(idx);
    const auto refs = format_refs(retrieve(ex.question, k));
    const auto x = templates_.get(TemplateName::Init).render({{"query", ex.question}, {"refs", refs}});
    const auto candidates = generate_candidates(x);
    const auto texts = texts_of(candidates);
    if (candidates.size() < 2) {
      skip(Stage::Init, ex.id, "fewer than two non-empty candidates");
      continue;
    }
    if (all_identical(texts)) {
      skip(Stage::Init, ex.id, "all candidates identical");
      continue;
    }
    const auto judge_prompt = templates_.get(TemplateName::JudgeInit)
                                  .render({{"query", ex.question}, {"refs", refs}, {"notes", format_id_list(texts)}});
    BestWorst verdict;
    try {
      verdict = parse_best_worst(judge(judge_prompt));
    } catch (const ParseError& e) {
      skip(Stage::Init, ex.id, std::string("judge output unparseable: ") + e.what());
      continue;
    }
    const int n = static_cast<int>(candidates.size());
    if (verdict.best_id < 1 || verdict.best_id > n || verdict.worst_id < 1 || verdict.worst_id > n) {
      skip(Stage::Init, ex.id, "judge id out of range");
      continue;
    }
    if (verdict.best_id == verdict.worst_id) {
      skip(Stage::Init, ex.id, "judge gave the same id for best and worst");
      continue;
    }
    const auto& chosen = candidates[static_cast<std::size_t>(verdict.best_id - 1)];
    const auto& rejected = candidates[static_cast<std::size_t>(verdict.worst_id - 1)];
    if (chosen.text == rejected.text) {
      skip(Stage::Init, ex.id, "chosen and rejected texts are identical");
      continue;
    }
    init_choice_[ex.id] = InitChoice{chosen.text};
    pairs.push_back(PreferencePair{Stage::Init, x, chosen.text, rejected.text,
                                   json{{"example_id", ex.id},
                                        {"top_k", k},
                                        {"chosen", candidate_meta(chosen)},
                                        {"rejected", candidate_meta(rejected)},
                                        {"judge", {{"best_id", verdict.best_id}, {"worst_id", verdict.worst_id}}}}});
  }
  return pairs;
}

std::vector<PreferencePair> DnAlignBuilder::build_qr_pairs(const std::vector<QaExample>& examples) {
  std::vector<PreferencePair> pairs;
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    const auto& ex = examples[idx];
    auto init = init_choice_.find(ex.id);
    if (init == init_choice_.end()) {
      skip(Stage::QR, ex.id, "no chosen initial note");
      continue;
    }
    const auto& note = init->second.note;
    const auto x = templates_.get(TemplateName::QueryRefine)
                       .render({{"query", ex.question}, {"note", note}, {"query_log", format_query_log({})}});
    const auto candidates = generate_candidates(x);
    const auto texts = texts_of(candidates);
    if (candidates.size() < 2) {
      skip(Stage::QR, ex.id, "fewer than two non-empty candidates");
      continue;
    }
    if (all_identical(texts)) {
      skip(Stage::QR, ex.id, "all candidates identical");
      continue;
    }
    const auto judge_prompt = templates_.get(TemplateName::JudgeQueryRefine)
                                  .render({{"notes", note},
                                           {"query", ex.question},
                                           {"query_log", format_query_log({})},
                                           {"new_querys", format_id_list(texts)}});
    BestWorst verdict;
    try {
      verdict = parse_best_worst(judge(judge_prompt));
    } catch (const ParseError& e) {
      skip(Stage::QR, ex.id, std::string("judge output unparseable: ") + e.what());
      continue;
    }
    const int n = static_cast<int>(candidates.size());
    if (verdict.best_id < 1 || verdict.best_id > n || verdict.worst_id < 1 || verdict.worst_id > n) {
      skip(Stage::QR, ex.id, "judge id out of range");
      continue;
    }
    if (verdict.best_id == verdict.worst_id) {
      skip(Stage::QR, ex.id, "judge gave the same id for best and worst");
      continue;
    }
    const auto& chosen = candidates[static_cast<std::size_t>(verdict.best_id - 1)];
    const auto& rejected = candidates[static_cast<std::size_t>(verdict.worst_id - 1)];
    if (chosen.text == rejected.text) {
      skip(Stage::QR, ex.id, "chosen and rejected texts are identical");
      continue;
    }
    qr_choice_[ex.id] = QrChoice{chosen.text};
    pairs.push_back(PreferencePair{Stage::QR, x, chosen.text, rejected.text,
                                   json{{"example_id", ex.id},
                                        {"chosen", candidate_meta(chosen)},
                                        {"rejected", candidate_meta(rejected)},
                                        {"judge", {{"best_id", verdict.best_id}, {"worst_id", verdict.worst_id}}}}});
  }
  return pairs;
}

std::vector<PreferencePair> DnAlignBuilder::build_ka_pairs(const std::vector<QaExample>& examples) {
  std::vector<PreferencePair> pairs;
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    const auto& ex = examples[idx];
    auto init = init_choice_.find(ex.id);
    auto qr = qr_choice_.find(ex.id);
    if (init == init_choice_.end() || qr == qr_choice_.end()) {
      skip(Stage::KA, ex.id, "no chosen refined question");
      continue;
    }
    std::vector<std::string> queries;
    try {
      queries = parse_queries(qr->second.output, config_.queries_per_refinement);
    } catch (const ParseError& e) {
      skip(Stage::KA, ex.id, std::string("chosen refinement has no queries: ") + e.what());
      continue;
    }
    const int k = top_k_for(idx);
    std::vector<std::vector<ScoredPassage>> hits;
    for (const auto& q : queries) hits.push_back(retriever_.search(q, k));
    std::vector<Passage> passages;
    for (const auto& hit : merge_hits(hits)) passages.push_back(retriever_.passage(hit.passage_id));

    const auto& note = init->second.note;
    const auto x = templates_.get(TemplateName::KnowledgeAccumulate)
                       .render({{"query", ex.question}, {"refs", format_refs(passages)}, {"note", note}});
    const auto candidates = generate_candidates(x);

    std::vector<std::size_t> positive, negative;
    std::size_t unlabeled = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto prompt = templates_.get(TemplateName::RetrievalDecision)
                              .render({{"query", ex.question}, {"best_note", note}, {"new_note", candidates[i].text}});
      try {
        (parse_status(judge(prompt)) ? positive : negative).push_back(i);
      } catch (const ParseError&) {
        ++unlabeled;
      }
    }
    if (positive.empty() || negative.empty()) {
      skip(Stage::KA, ex.id, positive.empty() ? "no positive candidate" : "no negative candidate");
      continue;
    }
    std::mt19937_64 rng(example_seed(Stage::KA, idx));
    const auto& chosen = candidates[positive[rng() % positive.size()]];
    const auto& rejected = candidates[negative[rng() % negative.size()]];
    if (chosen.text == rejected.text) {
      skip(Stage::KA, ex.id, "chosen and rejected texts are identical");
      continue;
    }
    pairs.push_back(PreferencePair{Stage::KA, x, chosen.text, rejected.text,
                                   json{{"example_id", ex.id},
                                        {"top_k", k},
                                        {"queries", queries},
                                        {"chosen", candidate_meta(chosen)},
                                        {"rejected", candidate_meta(rejected)},
                                        {"pools",
                                         {{"positive", positive.size()},
                                          {"negative", negative.size()},
                                          {"unlabeled", unlabeled}}}}});
  }
  return pairs;
}

std::vector<PreferencePair> DnAlignBuilder::build_ans_pairs(const std::vector<QaExample>& examples) {
  std::vector<PreferencePair> pairs;
  for (std::size_t idx = 0; idx < examples.size(); ++idx) {
    const auto& ex = examples[idx];
    const int k = top_k_for(idx);
    const auto reference = format_refs(retrieve(ex.question, k));
    const auto x =
        templates_.get(answer_template_for(config_.task_style)).render({{"query", ex.question}, {"note", reference}});
    const auto candidates = generate_candidates(x);
    if (candidates.size() < 2) {
      skip(Stage::Ans, ex.id, "fewer than two non-empty candidates");
      continue;
    }
    std::vector<double> scores;
    for (const auto& c : candidates) {
      switch (config_.task_style) {
        case TaskStyle::Multihop:
          scores.push_back(token_f1(c.text, ex.gold_answers));
          break;
        case TaskStyle::Longform:
          scores.push_back(str_em_hit(c.text, ex.qa_pairs).str_em);
          break;
        case TaskStyle::Shortform:
          scores.push_back(yesno_accuracy(c.text, ex.gold_answers.front()));
          break;
      }
    }
    const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    const auto worst = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
    if (scores[best] <= 0.0) {
      skip(Stage::Ans, ex.id, "no candidate scores above zero");
      continue;
    }
    if (scores[worst] >= scores[best]) {
      skip(Stage::Ans, ex.id, "all candidates tie");
      continue;
    }
    pairs.push_back(PreferencePair{Stage::Ans, x, candidates[best].text, candidates[worst].text,
                                   json{{"example_id", ex.id},
                                        {"top_k", k},
                                        {"chosen", candidate_meta(candidates[best])},
                                        {"rejected", candidate_meta(candidates[worst])},
                                        {"scores", {{"chosen", scores[best]}, {"rejected", scores[worst]}}}}});
  }
  return pairs;
}

std::vector<PreferencePair> DnAlignBuilder::build_all(const std::vector<QaExample>& examples) {
  auto out = build_init_pairs(examples);
  auto append = [&out](std::vector<PreferencePair> more) {
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  append(build_qr_pairs(examples));
  append(build_ka_pairs(examples));
  append(build_ans_pairs(examples));
  return out;
}

}  // namespace deepnote

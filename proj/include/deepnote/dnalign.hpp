#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deepnote/corpus.hpp"
#include "deepnote/llm.hpp"
#include "deepnote/prompt.hpp"
#include "deepnote/retriever.hpp"

namespace deepnote {

struct SamplingGrid {
  std::vector<double> temperatures{0.1, 0.5, 0.9};
  std::vector<double> top_ps{0.1, 0.5, 0.9};
  std::vector<int> top_ks{3, 5, 7};
  int max_tokens = 1024;

  /// temperature x top_p, temperature-major.
  std::vector<SamplingConfig> configs() const;
  void validate() const;
};

enum class Stage { Init, QR, KA, Ans };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

struct PreferencePair {
  Stage stage = Stage::Init;
  std::string input_x;
  std::string chosen;
  std::string rejected;
  nlohmann::json meta;
};

nlohmann::json pair_to_json(const PreferencePair& pair);

struct DpoInputs {
  double logp_theta_chosen = 0.0;
  double logp_ref_chosen = 0.0;
  double logp_theta_rejected = 0.0;
  double logp_ref_rejected = 0.0;
  double beta = 0.1;
};

/// Per-sample preference loss: softplus(-(beta * chosen_margin - beta * rejected_margin)).
double dpo_loss_term(const DpoInputs& inputs);

struct BuilderConfig {
  SamplingGrid grid;
  TaskStyle task_style = TaskStyle::Multihop;
  int queries_per_refinement = 2;
  std::uint64_t seed = 0;
  std::string model;
  std::string judge_model;
  SamplingConfig judge_sampling{0.1, 1.0, 1024};
  /// Concurrent candidate generations per example; 1 keeps scripted runs
  /// deterministic.
  int fanout = 1;
};

struct SkipRecord {
  Stage stage;
  std::string example_id;
  std::string reason;
};

/// Builds the four preference stages. Later stages consume the chosen outputs
/// of earlier ones (QR needs the chosen initial note, KA the chosen refined
/// question), which the builder keeps per example id.
class DnAlignBuilder {
 public:
  DnAlignBuilder(BuilderConfig config, const Retriever& retriever, GenerationBackend& generator,
                 GenerationBackend& judge, const TemplateSet& templates = TemplateSet::builtin());

  std::vector<PreferencePair> build_init_pairs(const std::vector<QaExample>& examples);
  std::vector<PreferencePair> build_qr_pairs(const std::vector<QaExample>& examples);
  std::vector<PreferencePair> build_ka_pairs(const std::vector<QaExample>& examples);
  std::vector<PreferencePair> build_ans_pairs(const std::vector<QaExample>& examples);

  /// Stages in dependency order: Init, QR, KA, Ans.
  std::vector<PreferencePair> build_all(const std::vector<QaExample>& examples);

  const std::vector<SkipRecord>& skipped() const noexcept { return skipped_; }

  /// top-k used for the example at `index`, cycling through grid.top_ks.
  int top_k_for(std::size_t index) const;

 private:
  struct Candidate {
    std::string text;
    SamplingConfig sampling;
    std::size_t grid_index;
  };
  struct InitChoice {
    std::string note;
  };
  struct QrChoice {
    std::string output;
  };

  std::vector<Candidate> generate_candidates(const std::string& prompt);
  std::string judge(const std::string& prompt);
  std::vector<Passage> retrieve(std::string_view query, int k) const;
  void skip(Stage stage, const std::string& id, std::string reason);
  std::uint64_t example_seed(Stage stage, std::size_t index) const;

  BuilderConfig config_;
  const Retriever& retriever_;
  GenerationBackend& generator_;
  GenerationBackend& judge_;
  const TemplateSet& templates_;
  std::map<std::string, InitChoice> init_choice_;
  std::map<std::string, QrChoice> qr_choice_;
  std::vector<SkipRecord> skipped_;
};

}  // namespace deepnote

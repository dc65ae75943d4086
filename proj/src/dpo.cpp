#include <cmath>

#include "deepnote/dnalign.hpp"
#include "deepnote/error.hpp"

namespace deepnote {

double dpo_loss_term(const DpoInputs& in) {
  for (double v : {in.logp_theta_chosen, in.logp_ref_chosen, in.logp_theta_rejected, in.logp_ref_rejected}) {
    if (!std::isfinite(v)) throw ConfigError("dpo inputs must be finite log-probabilities");
  }
  if (!(in.beta > 0.0) || !std::isfinite(in.beta)) throw ConfigError("dpo beta must be positive");
  const double chosen_margin = in.logp_theta_chosen - in.logp_ref_chosen;
  const double rejected_margin = in.logp_theta_rejected - in.logp_ref_rejected;
  const double z = in.beta * chosen_margin - in.beta * rejected_margin;
  // -log(sigmoid(z)) == softplus(-z)
  const double x = -z;
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace deepnote

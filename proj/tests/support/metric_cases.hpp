#pragma once

#include <string>
#include <vector>

#include "deepnote/corpus.hpp"

namespace deepnote::testing {

// One prediction with its expected metric values, each worked out by hand
// from normalised token counts (see the note on every case).
struct MetricCase {
  std::string name;
  TaskStyle style;
  std::string prediction;
  QaExample example;
  std::vector<std::pair<std::string, double>> expected;
};

std::vector<MetricCase> metric_cases();

// Runs score_example over every case; returns one message per mismatch.
std::vector<std::string> check_metric_cases(double tolerance = 1e-9);

}  // namespace deepnote::testing

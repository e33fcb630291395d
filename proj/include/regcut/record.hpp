#pragma once

#include <cstdint>
#include <string>

namespace regcut {

/// One solver run on one benchmark graph.
struct TrialRecord {
  std::string method;
  int n = 0;
  int d = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t trial_seed = 0;
  std::int64_t cut_value = 0;
  double p = 0.0;
  double wall_time_ms = 0.0;
  bool failed = false;
  std::string error;
};

}  // namespace regcut

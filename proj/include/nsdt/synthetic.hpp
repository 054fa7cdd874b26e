#pragma once

#include "nsdt/common.hpp"

#include <cstdint>
#include <string>

namespace nsdt {

// Deterministic schema-matched stand-in data written in each dataset's
// published file format, for offline pipelines and desk-scale experiments.
// The generators plant a soft (logistic) decision structure with class ratios
// matching the real datasets, plus a few missing cells, exact duplicates and
// (census) label conflicts so the cleaning path is exercised end to end.
struct SynthConfig {
  Index rows = 20000;
  std::uint64_t seed = 7;
  Index duplicates = 6;  // appended exact copies
  Index missing = 12;    // rows with one cell blanked to the na marker
  Index conflicts = 3;   // census only: feature-identical pairs with both labels
};

void write_synthetic_dataset(const std::string& dataset_id, const std::string& data_dir,
                             const SynthConfig& config);

}  // namespace nsdt

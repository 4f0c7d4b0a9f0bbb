#pragma once

#include <cstdint>
#include <string>

#include "dcor/augment.hpp"
#include "dcor/graphdata.hpp"
#include "dcor/trainer.hpp"

namespace dcor {

// Normalization is on by default for synthesized data, off for loaded data;
// the config can force either.
enum class NormalizeMode { kAuto, kOn, kOff };

// Flat key=value run configuration. Unknown keys are rejected; missing keys
// take the defaults below; every key (defaults included) is echoed by
// write_resolved().
struct RunConfig {
  SynthSpec synth;
  AugmentConfig augment;
  TrainConfig train;
  NormalizeMode normalize = NormalizeMode::kAuto;
  std::uint64_t seed = 1;

  // input paths
  std::string edges;
  std::string features;
  std::string labels;
  std::string checkpoint;
  std::string scores;

  static RunConfig defaults() { return RunConfig{}; }
  static RunConfig parse_file(const std::string& path);
  // Applies the single master seed to every seeded component.
  void apply_seed(std::uint64_t s);
  void write_resolved(const std::string& path) const;
};

}  // namespace dcor

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcor/graphdata.hpp"
#include "dcor/rng.hpp"

namespace dcor {

enum class AnomalyKind { kClique, kIsolate, kFeatureCopy, kFeatureScale };

const char* to_string(AnomalyKind kind);

// One injection event: which nodes it marked anomalous and how.
struct Provenance {
  AnomalyKind kind;
  std::vector<int> nodes;
  int source = -1;      // feature copy: node the row was taken from
  double factor = 0.0;  // feature scale: multiplier
};

// Injection budget and knobs. Rates multiply base_count, the total
// anomalous-node budget (0 means 5% of n, at least 1).
struct AugmentConfig {
  double structure_rate = 0.5;
  double feature_rate = 0.5;
  int base_count = 0;
  int clique_size = 10;
  int candidate_size = 50;
  double scale_factor = 10.0;
  std::uint64_t seed = 1;
};

// Augmented graph plus per-node pseudo-labels: y_i = 1 exactly for nodes
// appearing in the provenance. Node count always matches the source graph.
struct AugmentedView {
  AttributedGraph graph;
  std::vector<std::uint8_t> labels;
  std::vector<Provenance> provenance;

  static AugmentedView wrap(const AttributedGraph& g);
};

// In-place injections; make_view composes them on a working copy.
// Each returns the recorded provenance entry.
const Provenance& inject_clique(AugmentedView& view, std::span<const int> members);
const Provenance& inject_isolate(AugmentedView& view, int target);
// Samples `candidate_size` nodes (without replacement, excluding target) and
// replaces the target row with the candidate row at maximum Euclidean distance.
const Provenance& inject_feature_copy(AugmentedView& view, int target, int candidate_size, Rng& rng);
const Provenance& inject_feature_scale(AugmentedView& view, int target, double factor);

int resolved_base_count(const AugmentConfig& cfg, int n);
void check_augment_config(const AugmentConfig& cfg);

// Seeded injection of round(structure_rate * base_count) structural
// anomaly nodes (alternating clique / isolate events) and
// round(feature_rate * base_count) feature anomaly nodes (alternating
// copy / scale), all on distinct uniformly sampled nodes. Pure: the input
// graph is never mutated.
AugmentedView make_view(const AttributedGraph& g, const AugmentConfig& cfg);

// Sidecar format: one record per line (kind, node ids, parameters).
void save_provenance(const std::vector<Provenance>& records, const std::string& path);

}  // namespace dcor

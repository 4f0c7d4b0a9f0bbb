#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcor/augment.hpp"
#include "dcor/graphdata.hpp"
#include "dcor/model.hpp"
#include "dcor/objective.hpp"

namespace dcor {

enum class Ablation { kFull, kFeatureAugOnly, kAdjacencyAugOnly, kNoContrastive };

const char* to_string(Ablation mode);
std::optional<Ablation> parse_ablation(const std::string& name);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  int hidden_dim = 128;
  ObjectiveConfig objective;
  AugmentConfig augment;  // training-view injection; its seed is derived from `seed`
  std::uint64_t seed = 1;
  Ablation ablation = Ablation::kFull;
  int resample_view_every = 0;  // 0: one view for the whole run
  bool record_auc = true;       // per-epoch AUC when ground truth has both classes

  void check() const;
};

// Loss record for one epoch. l_rec is the per-entry-normalized
// reconstruction term the trainer optimizes (see
// reconstruction_loss_mean_on); the identities l_sc = l_struct + l_feat and
// l_total = lambda_rec * l_rec + lambda_sc * l_sc hold exactly.
struct EpochMetrics {
  int epoch = 0;
  double l_rec = 0.0;
  double l_struct = 0.0;
  double l_feat = 0.0;
  double l_sc = 0.0;
  double l_total = 0.0;
  std::optional<double> auc;
};

struct TrainResult {
  DcorParams params;
  std::vector<EpochMetrics> history;
};

// Full-batch training: per epoch one forward pass on the graph, one on the
// seeded training view (skipped under kNoContrastive), Adam on the total
// loss. Deterministic given (g, cfg). Throws DivergenceError when a loss
// goes non-finite.
TrainResult train(const AttributedGraph& g, const TrainConfig& cfg);

// Mann-Whitney AUC: fraction of (anomaly, normal) pairs where the anomaly
// scores strictly higher, ties counting one half. Both classes must appear.
double evaluate_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Node ids, descending by score, ties broken by ascending id.
std::vector<int> rank_nodes(std::span<const double> scores);

// One epoch per line: "epoch=N l_rec=... l_struct=... l_feat=... l_sc=...
// l_total=... [auc=...]", floats with 17 significant digits.
void write_metrics(const std::vector<EpochMetrics>& history, const std::string& path);

// One node per line, "node_id score rank", sorted by rank.
void write_scores(std::span<const double> scores, const std::string& path);

// Planted-anomaly experiment: generate a synthetic graph, inject a labeled
// benchmark view (its pseudo-labels become the ground truth), train on it
// with an independent training view, score, and report AUC.
struct PlantedExperiment {
  SynthSpec synth;
  bool normalize = true;
  AugmentConfig benchmark;  // benchmark injection; its own seed field is used
  TrainConfig training;
};

struct PlantedResult {
  double auc = 0.0;
  AttributedGraph bench_graph;
  std::vector<double> scores;
  TrainResult run;
};

PlantedResult run_planted_experiment(const PlantedExperiment& exp);

// Central finite-difference verification of the full-loss gradients on a
// small random instance (step 1e-5).
struct GradCheckConfig {
  int n = 12;
  int d = 8;
  int h = 8;
  std::uint64_t seed = 7;
  double step = 1e-5;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckEntry> per_param;
  double max_rel_err = 0.0;
};

GradCheckResult run_gradcheck(const GradCheckConfig& cfg);

}  // namespace dcor

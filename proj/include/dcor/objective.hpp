#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcor/graphdata.hpp"
#include "dcor/model.hpp"
#include "dcor/numcore.hpp"

namespace dcor {

// Which pair of rows the per-node contrastive distance compares.
// kReconVsRecon: main-graph reconstruction row vs augmented-graph
// reconstruction row. kDataVsRecon: original data row vs augmented-graph
// reconstruction row (the literal reading of the loss definition).
enum class ContrastTarget { kReconVsRecon, kDataVsRecon };

struct ObjectiveConfig {
  double alpha = 0.5;       // structure/attribute reconstruction trade-off
  double margin = 0.5;      // contrastive hinge margin
  double lambda_rec = 0.5;  // reconstruction loss weight
  double lambda_sc = 0.5;   // contrastive loss weight
  ContrastTarget contrast_target = ContrastTarget::kReconVsRecon;

  void check() const;
};

struct LossBreakdown {
  double l_rec = 0.0;
  double l_struct = 0.0;
  double l_feat = 0.0;
  double l_sc = 0.0;
  double l_total = 0.0;
};

// ||u - v||_2 / sqrt(len): dimension-normalized Euclidean distance, so the
// fixed margin stays comparable across row lengths.
double row_distance(std::span<const double> u, std::span<const double> v);

// alpha ||A - A_hat||_F^2 + (1 - alpha) ||X - X_hat||_F^2 as a 1x1 tape node.
ValueId reconstruction_loss_on(Tape& t, const AttributedGraph& g, const ForwardNodes& rec, double alpha);

// Per-entry-normalized variant used as the training objective:
// alpha mean((A - A_hat)^2) + (1 - alpha) mean((X - X_hat)^2). Brings the
// reconstruction term onto the same scale as the per-node contrastive
// losses, so the lambda weights trade the two off meaningfully.
ValueId reconstruction_loss_mean_on(Tape& t, const AttributedGraph& g, const ForwardNodes& rec,
                                    double alpha);

struct ContrastiveNodes {
  ValueId l_struct, l_feat, l_sc;
};

// Per node i with pseudo-label y_i: normal nodes contribute the row distance
// itself, anomalous nodes the hinge max(0, margin - distance); both branches
// averaged over all n nodes. l_sc = l_struct + l_feat.
ContrastiveNodes contrastive_loss_on(Tape& t, const ForwardNodes& main_rec, const ForwardNodes& aug_rec,
                                     const std::vector<std::uint8_t>& labels, const AttributedGraph& g,
                                     const ObjectiveConfig& cfg);

// lambda_rec * l_rec + lambda_sc * l_sc as a 1x1 tape node.
ValueId total_loss_on(Tape& t, ValueId l_rec, ValueId l_sc, double lambda_rec, double lambda_sc);

// Plain evaluation (no tape).
double reconstruction_loss(const AttributedGraph& g, const Reconstruction& rec, double alpha);
struct ContrastiveLosses {
  double l_struct = 0.0, l_feat = 0.0, l_sc = 0.0;
};
ContrastiveLosses contrastive_loss(const Reconstruction& main_rec, const Reconstruction& aug_rec,
                                   const std::vector<std::uint8_t>& labels, const AttributedGraph& g,
                                   const ObjectiveConfig& cfg);
double total_loss(double l_rec, double l_sc, double lambda_rec, double lambda_sc);

// Per-node anomaly score S(v_i) = alpha ||A_i - A_hat_i||_2
// + (1 - alpha) ||X_i - X_hat_i||_2 on the original graph.
std::vector<double> anomaly_scores(const AttributedGraph& g, const Matrix& a_hat, const Matrix& x_hat,
                                   double alpha);
std::vector<double> anomaly_scores(const AttributedGraph& g, const Reconstruction& rec, double alpha);

}  // namespace dcor

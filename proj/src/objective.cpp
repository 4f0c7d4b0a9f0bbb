#include "dcor/objective.hpp"

#include <cmath>

#include "dcor/errors.hpp"

namespace dcor {

void ObjectiveConfig::check() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("objective: alpha must be in [0, 1]");
  if (!(margin > 0.0)) throw ConfigError("objective: margin must be > 0");
  if (lambda_rec < 0.0 || lambda_sc < 0.0) throw ConfigError("objective: loss weights must be >= 0");
}

double row_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw DimensionError("row_distance: lengths " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()) + " (need equal, >= 1)");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = u[i] - v[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(u.size()));
}

ValueId reconstruction_loss_on(Tape& t, const AttributedGraph& g, const ForwardNodes& rec, double alpha) {
  const ValueId a = t.input(g.dense_adjacency());
  const ValueId x = t.input(g.features());
  const ValueId ea = t.sub(rec.a_hat, a);
  const ValueId ex = t.sub(rec.x_hat, x);
  return t.add(t.scale(t.sum(t.mul(ea, ea)), alpha), t.scale(t.sum(t.mul(ex, ex)), 1.0 - alpha));
}

ValueId reconstruction_loss_mean_on(Tape& t, const AttributedGraph& g, const ForwardNodes& rec,
                                    double alpha) {
  const ValueId a = t.input(g.dense_adjacency());
  const ValueId x = t.input(g.features());
  const ValueId ea = t.sub(rec.a_hat, a);
  const ValueId ex = t.sub(rec.x_hat, x);
  const double na = static_cast<double>(t.value(ea).size());
  const double nx = static_cast<double>(t.value(ex).size());
  return t.add(t.scale(t.sum(t.mul(ea, ea)), alpha / na), t.scale(t.sum(t.mul(ex, ex)), (1.0 - alpha) / nx));
}

namespace {

// (1/n) * (sum over normals of d_i + sum over anomalies of max(0, m - d_i))
ValueId branch_loss(Tape& t, ValueId dist, const std::vector<std::uint8_t>& labels, double margin) {
  const int n = t.value(dist).rows;
  Matrix w_norm(n, 1), w_anom(n, 1);
  for (int i = 0; i < n; ++i) {
    w_anom(i, 0) = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    w_norm(i, 0) = 1.0 - w_anom(i, 0);
  }
  const ValueId hinge = t.leaky_relu(t.add_scalar(t.scale(dist, -1.0), margin), 0.0);
  const ValueId pulled = t.sum(t.mul(dist, t.input(std::move(w_norm))));
  const ValueId pushed = t.sum(t.mul(hinge, t.input(std::move(w_anom))));
  return t.scale(t.add(pulled, pushed), 1.0 / n);
}

}  // namespace

ContrastiveNodes contrastive_loss_on(Tape& t, const ForwardNodes& main_rec, const ForwardNodes& aug_rec,
                                     const std::vector<std::uint8_t>& labels, const AttributedGraph& g,
                                     const ObjectiveConfig& cfg) {
  cfg.check();
  const int n = t.value(main_rec.a_hat).rows;
  if (static_cast<int>(labels.size()) != n) {
    throw ContractError("contrastive_loss: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(n) + " nodes");
  }
  ValueId d_struct, d_feat;
  if (cfg.contrast_target == ContrastTarget::kReconVsRecon) {
    d_struct = t.row_distance(main_rec.a_hat, aug_rec.a_hat);
    d_feat = t.row_distance(main_rec.x_hat, aug_rec.x_hat);
  } else {
    d_struct = t.row_distance(t.input(g.dense_adjacency()), aug_rec.a_hat);
    d_feat = t.row_distance(t.input(g.features()), aug_rec.x_hat);
  }
  ContrastiveNodes out;
  out.l_struct = branch_loss(t, d_struct, labels, cfg.margin);
  out.l_feat = branch_loss(t, d_feat, labels, cfg.margin);
  out.l_sc = t.add(out.l_struct, out.l_feat);
  return out;
}

ValueId total_loss_on(Tape& t, ValueId l_rec, ValueId l_sc, double lambda_rec, double lambda_sc) {
  return t.add(t.scale(l_rec, lambda_rec), t.scale(l_sc, lambda_sc));
}

double reconstruction_loss(const AttributedGraph& g, const Reconstruction& rec, double alpha) {
  const Matrix a = g.dense_adjacency();
  const Matrix& x = g.features();
  if (!rec.a_hat.same_shape(a)) {
    throw DimensionError("reconstruction_loss: a_hat " + shape_str(rec.a_hat) + " vs A " + shape_str(a));
  }
  if (!rec.x_hat.same_shape(x)) {
    throw DimensionError("reconstruction_loss: x_hat " + shape_str(rec.x_hat) + " vs X " + shape_str(x));
  }
  double sa = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double e = rec.a_hat.v[i] - a.v[i];
    sa += e * e;
  }
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double e = rec.x_hat.v[i] - x.v[i];
    sx += e * e;
  }
  return alpha * sa + (1.0 - alpha) * sx;
}

ContrastiveLosses contrastive_loss(const Reconstruction& main_rec, const Reconstruction& aug_rec,
                                   const std::vector<std::uint8_t>& labels, const AttributedGraph& g,
                                   const ObjectiveConfig& cfg) {
  cfg.check();
  const int n = main_rec.a_hat.rows;
  if (static_cast<int>(labels.size()) != n) {
    throw ContractError("contrastive_loss: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(n) + " nodes");
  }
  const Matrix a = g.dense_adjacency();
  const bool literal = cfg.contrast_target == ContrastTarget::kDataVsRecon;
  double s_struct = 0.0, s_feat = 0.0;
  for (int i = 0; i < n; ++i) {
    const double da = literal ? row_distance(a.row(i), aug_rec.a_hat.row(i))
                              : row_distance(main_rec.a_hat.row(i), aug_rec.a_hat.row(i));
    const double dx = literal ? row_distance(g.features().row(i), aug_rec.x_hat.row(i))
                              : row_distance(main_rec.x_hat.row(i), aug_rec.x_hat.row(i));
    if (labels[static_cast<std::size_t>(i)]) {
      s_struct += std::max(0.0, cfg.margin - da);
      s_feat += std::max(0.0, cfg.margin - dx);
    } else {
      s_struct += da;
      s_feat += dx;
    }
  }
  ContrastiveLosses out;
  out.l_struct = s_struct / n;
  out.l_feat = s_feat / n;
  out.l_sc = out.l_struct + out.l_feat;
  return out;
}

double total_loss(double l_rec, double l_sc, double lambda_rec, double lambda_sc) {
  if (lambda_rec < 0.0 || lambda_sc < 0.0) throw ConfigError("total_loss: weights must be >= 0");
  return lambda_rec * l_rec + lambda_sc * l_sc;
}

std::vector<double> anomaly_scores(const AttributedGraph& g, const Matrix& a_hat, const Matrix& x_hat,
                                   double alpha) {
  const int n = g.node_count();
  const int d = g.feature_dim();
  if (a_hat.rows != n || a_hat.cols != n) {
    throw DimensionError("anomaly_scores: a_hat " + shape_str(a_hat) + " for n=" + std::to_string(n));
  }
  if (x_hat.rows != n || x_hat.cols != d) {
    throw DimensionError("anomaly_scores: x_hat " + shape_str(x_hat) + " for " + std::to_string(n) + "x" +
                         std::to_string(d));
  }
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Walk the sorted neighbor list alongside column index: A_ij without densifying.
    const std::vector<int>& nbrs = g.neighbors(i);
    std::size_t k = 0;
    double sa = 0.0;
    for (int j = 0; j < n; ++j) {
      double aij = 0.0;
      if (k < nbrs.size() && nbrs[k] == j) {
        aij = 1.0;
        ++k;
      }
      const double e = a_hat(i, j) - aij;
      sa += e * e;
    }
    double sx = 0.0;
    for (int j = 0; j < d; ++j) {
      const double e = x_hat(i, j) - g.features()(i, j);
      sx += e * e;
    }
    scores[static_cast<std::size_t>(i)] = alpha * std::sqrt(sa) + (1.0 - alpha) * std::sqrt(sx);
  }
  return scores;
}

std::vector<double> anomaly_scores(const AttributedGraph& g, const Reconstruction& rec, double alpha) {
  return anomaly_scores(g, rec.a_hat, rec.x_hat, alpha);
}

}  // namespace dcor

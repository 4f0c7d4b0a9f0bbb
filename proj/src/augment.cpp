#include "dcor/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "dcor/errors.hpp"

namespace dcor {

namespace {

void mark(AugmentedView& view, const std::vector<int>& nodes) {
  for (int v : nodes) view.labels[static_cast<std::size_t>(v)] = 1;
}

void check_target(const AugmentedView& view, int v, const char* op) {
  if (v < 0 || v >= view.graph.node_count()) {
    throw ContractError(std::string(op) + ": node id " + std::to_string(v) + " out of range [0, " +
                        std::to_string(view.graph.node_count()) + ")");
  }
}

bool row_all_zero(const Matrix& x, int i) {
  for (int j = 0; j < x.cols; ++j) {
    if (x(i, j) != 0.0) return false;
  }
  return true;
}

}  // namespace

const char* to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kClique: return "clique";
    case AnomalyKind::kIsolate: return "isolate";
    case AnomalyKind::kFeatureCopy: return "feature_copy";
    case AnomalyKind::kFeatureScale: return "feature_scale";
  }
  return "?";
}

AugmentedView AugmentedView::wrap(const AttributedGraph& g) {
  AugmentedView view;
  view.graph = g;
  view.labels.assign(static_cast<std::size_t>(g.node_count()), 0);
  return view;
}

const Provenance& inject_clique(AugmentedView& view, std::span<const int> members) {
  const int n = view.graph.node_count();
  if (static_cast<int>(members.size()) > n) {
    throw ConfigError("inject_clique: clique size " + std::to_string(members.size()) +
                      " exceeds node count " + std::to_string(n));
  }
  if (members.size() < 2) throw ContractError("inject_clique: need at least 2 members");
  std::set<int> distinct(members.begin(), members.end());
  if (distinct.size() != members.size()) throw ContractError("inject_clique: members must be distinct");
  for (int v : members) check_target(view, v, "inject_clique");

  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      view.graph.add_edge(members[i], members[j]);
    }
  }
  Provenance rec;
  rec.kind = AnomalyKind::kClique;
  rec.nodes.assign(members.begin(), members.end());
  std::sort(rec.nodes.begin(), rec.nodes.end());
  mark(view, rec.nodes);
  view.provenance.push_back(std::move(rec));
  return view.provenance.back();
}

const Provenance& inject_isolate(AugmentedView& view, int target) {
  check_target(view, target, "inject_isolate");
  view.graph.isolate(target);
  Provenance rec;
  rec.kind = AnomalyKind::kIsolate;
  rec.nodes = {target};
  mark(view, rec.nodes);
  view.provenance.push_back(std::move(rec));
  return view.provenance.back();
}

const Provenance& inject_feature_copy(AugmentedView& view, int target, int candidate_size, Rng& rng) {
  check_target(view, target, "inject_feature_copy");
  const int n = view.graph.node_count();
  if (candidate_size < 1) throw ConfigError("inject_feature_copy: candidate pool must be >= 1");
  if (candidate_size >= n) {
    throw ConfigError("inject_feature_copy: candidate pool " + std::to_string(candidate_size) +
                      " must be smaller than node count " + std::to_string(n));
  }

  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(n) - 1);
  for (int v = 0; v < n; ++v) {
    if (v != target) others.push_back(v);
  }
  const std::vector<int> pool = rng.sample(std::move(others), candidate_size);

  const Matrix& x = view.graph.features();
  int best = pool.front();
  double best_d2 = -1.0;
  for (int cand : pool) {
    double d2 = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      const double e = x(cand, j) - x(target, j);
      d2 += e * e;
    }
    if (d2 > best_d2) {
      best_d2 = d2;
      best = cand;
    }
  }

  Matrix& feats = view.graph.mutable_features();
  for (int j = 0; j < feats.cols; ++j) feats(target, j) = feats(best, j);

  Provenance rec;
  rec.kind = AnomalyKind::kFeatureCopy;
  rec.nodes = {target};
  rec.source = best;
  mark(view, rec.nodes);
  view.provenance.push_back(std::move(rec));
  return view.provenance.back();
}

const Provenance& inject_feature_scale(AugmentedView& view, int target, double factor) {
  check_target(view, target, "inject_feature_scale");
  if (!(factor > 0.0)) throw ConfigError("inject_feature_scale: factor must be > 0");
  Matrix& feats = view.graph.mutable_features();
  for (int j = 0; j < feats.cols; ++j) feats(target, j) *= factor;
  Provenance rec;
  rec.kind = AnomalyKind::kFeatureScale;
  rec.nodes = {target};
  rec.factor = factor;
  mark(view, rec.nodes);
  view.provenance.push_back(std::move(rec));
  return view.provenance.back();
}

int resolved_base_count(const AugmentConfig& cfg, int n) {
  if (cfg.base_count > 0) return cfg.base_count;
  return std::max(1, static_cast<int>(std::llround(0.05 * n)));
}

void check_augment_config(const AugmentConfig& cfg) {
  if (!(cfg.structure_rate >= 0.0 && cfg.structure_rate <= 1.0)) {
    throw ConfigError("augment: structure_rate must be in [0, 1]");
  }
  if (!(cfg.feature_rate >= 0.0 && cfg.feature_rate <= 1.0)) {
    throw ConfigError("augment: feature_rate must be in [0, 1]");
  }
  if (cfg.base_count < 0) throw ConfigError("augment: base_count must be >= 0");
  if (cfg.clique_size < 2) throw ConfigError("augment: clique_size must be >= 2");
  if (cfg.candidate_size < 1) throw ConfigError("augment: candidate_size must be >= 1");
  if (!(cfg.scale_factor > 0.0)) throw ConfigError("augment: scale_factor must be > 0");
}

AugmentedView make_view(const AttributedGraph& g, const AugmentConfig& cfg) {
  check_augment_config(cfg);
  const int n = g.node_count();
  const int base = resolved_base_count(cfg, n);
  const int structure_budget = static_cast<int>(std::llround(cfg.structure_rate * base));
  const int feature_budget = static_cast<int>(std::llround(cfg.feature_rate * base));
  if (structure_budget + feature_budget > n) {
    throw ConfigError("make_view: anomaly budget " + std::to_string(structure_budget + feature_budget) +
                      " exceeds node count " + std::to_string(n));
  }

  AugmentedView view = AugmentedView::wrap(g);
  Rng rng(cfg.seed);

  // Distinct uniformly sampled targets: one shuffled stream, consumed in order.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t cursor = 0;
  const auto take = [&](auto&& eligible, const char* what) {
    while (cursor < order.size()) {
      const int v = order[cursor++];
      if (eligible(v)) return v;
    }
    throw ConfigError(std::string("make_view: ran out of eligible nodes for ") + what);
  };
  const auto any_node = [](int) { return true; };

  int remaining = structure_budget;
  bool clique_turn = true;
  while (remaining > 0) {
    if (clique_turn && remaining >= cfg.clique_size) {
      std::vector<int> members;
      members.reserve(static_cast<std::size_t>(cfg.clique_size));
      for (int i = 0; i < cfg.clique_size; ++i) members.push_back(take(any_node, "clique"));
      inject_clique(view, members);
      remaining -= cfg.clique_size;
    } else {
      // Degree-0 targets are skipped: isolating them would change nothing
      // and the label would be false.
      const int v = take([&](int u) { return view.graph.degree(u) > 0; }, "isolate");
      inject_isolate(view, v);
      remaining -= 1;
    }
    clique_turn = !clique_turn;
  }

  remaining = feature_budget;
  bool copy_turn = true;
  while (remaining > 0) {
    if (copy_turn) {
      const int v = take(any_node, "feature copy");
      inject_feature_copy(view, v, cfg.candidate_size, rng);
    } else {
      // All-zero rows are skipped: scaling them is a no-op.
      const int v = take([&](int u) { return !row_all_zero(view.graph.features(), u); }, "feature scale");
      inject_feature_scale(view, v, cfg.scale_factor);
    }
    remaining -= 1;
    copy_turn = !copy_turn;
  }

  return view;
}

void save_provenance(const std::vector<Provenance>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  for (const Provenance& rec : records) {
    out << to_string(rec.kind) << " nodes=";
    for (std::size_t i = 0; i < rec.nodes.size(); ++i) {
      if (i) out << ",";
      out << rec.nodes[i];
    }
    if (rec.kind == AnomalyKind::kFeatureCopy) out << " source=" << rec.source;
    if (rec.kind == AnomalyKind::kFeatureScale) out << " factor=" << format_double(rec.factor);
    out << "\n";
  }
}

}  // namespace dcor

#include "dcor/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dcor/errors.hpp"
#include "dcor/rng.hpp"

namespace dcor {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kViewStream = 1;

bool both_classes(std::span<const std::uint8_t> labels) {
  bool has0 = false, has1 = false;
  for (std::uint8_t y : labels) (y ? has1 : has0) = true;
  return has0 && has1;
}

struct EffectiveConfig {
  TrainConfig cfg;
  bool contrastive = true;
};

EffectiveConfig apply_ablation(const TrainConfig& cfg) {
  EffectiveConfig eff{cfg, true};
  switch (cfg.ablation) {
    case Ablation::kFull:
      break;
    case Ablation::kFeatureAugOnly:
      eff.cfg.augment.structure_rate = 0.0;
      break;
    case Ablation::kAdjacencyAugOnly:
      eff.cfg.augment.feature_rate = 0.0;
      break;
    case Ablation::kNoContrastive:
      eff.cfg.objective.lambda_sc = 0.0;
      eff.contrastive = false;
      break;
  }
  return eff;
}

}  // namespace

const char* to_string(Ablation mode) {
  switch (mode) {
    case Ablation::kFull: return "full";
    case Ablation::kFeatureAugOnly: return "feature_aug_only";
    case Ablation::kAdjacencyAugOnly: return "adjacency_aug_only";
    case Ablation::kNoContrastive: return "no_contrastive";
  }
  return "?";
}

std::optional<Ablation> parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::kFull;
  if (name == "feature_aug_only") return Ablation::kFeatureAugOnly;
  if (name == "adjacency_aug_only") return Ablation::kAdjacencyAugOnly;
  if (name == "no_contrastive") return Ablation::kNoContrastive;
  return std::nullopt;
}

void TrainConfig::check() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
  if (resample_view_every < 0) throw ConfigError("train: resample_view_every must be >= 0");
  objective.check();
  check_augment_config(augment);
}

TrainResult train(const AttributedGraph& g, const TrainConfig& cfg) {
  cfg.check();
  {
    const std::vector<std::string> bad = validate(g);
    if (!bad.empty()) throw ContractError("train: invalid graph: " + bad.front());
  }

  const EffectiveConfig eff = apply_ablation(cfg);
  const ObjectiveConfig& obj = eff.cfg.objective;
  const int n = g.node_count();

  DcorParams params = DcorParams::init(n, g.feature_dim(), eff.cfg.hidden_dim,
                                       derive_seed(cfg.seed, kInitStream));
  std::vector<AdamState> opt;
  for (auto& [name, m] : params.entries()) {
    (void)name;
    opt.push_back(AdamState::like(*m));
  }

  AugmentedView view;
  const auto resample_view = [&](int index) {
    AugmentConfig vc = eff.cfg.augment;
    vc.seed = derive_seed(cfg.seed, kViewStream + static_cast<std::uint64_t>(index));
    view = make_view(g, vc);
  };
  if (eff.contrastive) resample_view(0);

  const bool track_auc = cfg.record_auc && g.ground_truth() && both_classes(*g.ground_truth());

  TrainResult out;
  out.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (eff.contrastive && cfg.resample_view_every > 0 && epoch > 1 &&
        (epoch - 1) % cfg.resample_view_every == 0) {
      resample_view((epoch - 1) / cfg.resample_view_every);
    }

    Tape t;
    const ParamNodes pn = register_params(t, params);
    const ForwardNodes fmain = forward_on(t, g, pn);
    const ValueId l_rec = reconstruction_loss_mean_on(t, g, fmain, obj.alpha);

    ValueId l_sc;
    EpochMetrics em;
    em.epoch = epoch;
    if (eff.contrastive) {
      const ForwardNodes faug = forward_on(t, view.graph, pn);
      const ContrastiveNodes cn = contrastive_loss_on(t, fmain, faug, view.labels, g, obj);
      l_sc = cn.l_sc;
      em.l_struct = t.value(cn.l_struct)(0, 0);
      em.l_feat = t.value(cn.l_feat)(0, 0);
    } else {
      l_sc = t.input(Matrix::zeros(1, 1));
    }
    const ValueId l_total = total_loss_on(t, l_rec, l_sc, obj.lambda_rec, obj.lambda_sc);

    em.l_rec = t.value(l_rec)(0, 0);
    em.l_sc = t.value(l_sc)(0, 0);
    em.l_total = t.value(l_total)(0, 0);
    if (!std::isfinite(em.l_total) || !std::isfinite(em.l_rec) || !std::isfinite(em.l_sc)) {
      throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
    }

    if (track_auc) {
      const std::vector<double> scores =
          anomaly_scores(g, t.value(fmain.a_hat), t.value(fmain.x_hat), obj.alpha);
      em.auc = evaluate_auc(scores, *g.ground_truth());
    }

    t.backward(l_total);

    const auto entries = params.entries();
    const ValueId ids[] = {pn.w_v1, pn.b_v1, pn.w_v2, pn.attn, pn.w_a1, pn.b_a1, pn.w_a2, pn.b_a2};
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (t.has_grad(ids[k])) {
        adam_step(*entries[k].second, t.grad(ids[k]), opt[k], eff.cfg.learning_rate);
      }
    }

    out.history.push_back(em);
  }

  out.params = std::move(params);
  return out;
}

double evaluate_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("evaluate_auc: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw ContractError("evaluate_auc: empty input");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("evaluate_auc: scores must be finite");
  }
  if (!both_classes(labels)) {
    throw ContractError("evaluate_auc: AUC undefined, labels contain a single class");
  }

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: tied scores share the average of their 1-based positions.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }

  double rank_sum = 0.0;
  long n1 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k]) {
      rank_sum += rank[k];
      ++n1;
    }
  }
  const long n0 = static_cast<long>(n) - n1;
  const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

std::vector<int> rank_nodes(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("rank_nodes: scores must be finite");
  }
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return ids;
}

void write_metrics(const std::vector<EpochMetrics>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  for (const EpochMetrics& em : history) {
    out << "epoch=" << em.epoch << " l_rec=" << format_double(em.l_rec)
        << " l_struct=" << format_double(em.l_struct) << " l_feat=" << format_double(em.l_feat)
        << " l_sc=" << format_double(em.l_sc) << " l_total=" << format_double(em.l_total);
    if (em.auc) out << " auc=" << format_double(*em.auc);
    out << "\n";
  }
}

void write_scores(std::span<const double> scores, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  const std::vector<int> order = rank_nodes(scores);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int id = order[r];
    out << id << " " << format_double(scores[static_cast<std::size_t>(id)]) << " " << (r + 1) << "\n";
  }
}

PlantedResult run_planted_experiment(const PlantedExperiment& exp) {
  AttributedGraph g = generate_synthetic(exp.synth);
  if (exp.normalize) g = normalize_features(g);

  const AugmentedView bench = make_view(g, exp.benchmark);
  AttributedGraph bench_graph = bench.graph;
  bench_graph.set_ground_truth(bench.labels);

  PlantedResult out;
  out.run = train(bench_graph, exp.training);
  const Reconstruction rec = forward(bench_graph, out.run.params);
  out.scores = anomaly_scores(bench_graph, rec, exp.training.objective.alpha);
  out.auc = evaluate_auc(out.scores, bench.labels);
  out.bench_graph = std::move(bench_graph);
  return out;
}

GradCheckResult run_gradcheck(const GradCheckConfig& cfg) {
  // Small random attributed graph with a mixed anomaly view.
  SynthSpec spec;
  spec.n = cfg.n;
  spec.d = cfg.d;
  spec.communities = 2;
  spec.p_in = 0.6;
  spec.p_out = 0.15;
  spec.feature_noise = 0.2;
  spec.seed = derive_seed(cfg.seed, 11);
  const AttributedGraph g = generate_synthetic(spec);

  AugmentConfig ac;
  ac.structure_rate = 0.5;
  ac.feature_rate = 0.5;
  ac.base_count = 4;
  ac.clique_size = 3;
  ac.candidate_size = std::min(5, cfg.n - 1);
  ac.scale_factor = 10.0;
  ac.seed = derive_seed(cfg.seed, 13);
  const AugmentedView view = make_view(g, ac);

  ObjectiveConfig obj;  // alpha 0.5, margin 0.5, lambdas 0.5
  DcorParams params = DcorParams::init(cfg.n, cfg.d, cfg.h, derive_seed(cfg.seed, 17));

  const auto loss_at = [&](const DcorParams& p) {
    Tape t;
    const ParamNodes pn = register_params(t, p);
    const ForwardNodes fmain = forward_on(t, g, pn);
    const ForwardNodes faug = forward_on(t, view.graph, pn);
    const ValueId l_rec = reconstruction_loss_mean_on(t, g, fmain, obj.alpha);
    const ContrastiveNodes cn = contrastive_loss_on(t, fmain, faug, view.labels, g, obj);
    return t.value(total_loss_on(t, l_rec, cn.l_sc, obj.lambda_rec, obj.lambda_sc))(0, 0);
  };

  // Analytic gradients.
  Tape t;
  const ParamNodes pn = register_params(t, params);
  const ForwardNodes fmain = forward_on(t, g, pn);
  const ForwardNodes faug = forward_on(t, view.graph, pn);
  const ValueId l_rec = reconstruction_loss_mean_on(t, g, fmain, obj.alpha);
  const ContrastiveNodes cn = contrastive_loss_on(t, fmain, faug, view.labels, g, obj);
  t.backward(total_loss_on(t, l_rec, cn.l_sc, obj.lambda_rec, obj.lambda_sc));
  const ValueId ids[] = {pn.w_v1, pn.b_v1, pn.w_v2, pn.attn, pn.w_a1, pn.b_a1, pn.w_a2, pn.b_a2};

  GradCheckResult result;
  const auto entries = params.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Matrix& analytic = t.grad(ids[k]);
    Matrix& target = *entries[k].second;
    GradCheckEntry e;
    e.name = entries[k].first;
    for (std::size_t i = 0; i < target.v.size(); ++i) {
      const double keep = target.v[i];
      target.v[i] = keep + cfg.step;
      const double up = loss_at(params);
      target.v[i] = keep - cfg.step;
      const double down = loss_at(params);
      target.v[i] = keep;
      const double fd = (up - down) / (2.0 * cfg.step);
      const double rel = std::fabs(analytic.v[i] - fd) /
                         std::max({std::fabs(analytic.v[i]), std::fabs(fd), 1.0});
      e.max_rel_err = std::max(e.max_rel_err, rel);
    }
    result.max_rel_err = std::max(result.max_rel_err, e.max_rel_err);
    result.per_param.push_back(std::move(e));
  }
  return result;
}

}  // namespace dcor

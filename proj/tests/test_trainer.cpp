#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dcor/errors.hpp"
#include "dcor/trainer.hpp"
#include "test_support.hpp"

using namespace dcor;
using dcor::test::TempDir;

namespace {

// O(n^2) oracle: fraction of (anomaly, normal) pairs won, ties half.
double brute_force_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double won = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        won += 1.0;
      } else if (scores[i] == scores[j]) {
        won += 0.5;
      }
    }
  }
  return won / static_cast<double>(pairs);
}

AttributedGraph train_graph(int n, std::uint64_t seed) {
  SynthSpec spec;
  spec.n = n;
  spec.d = 6;
  spec.communities = 3;
  spec.p_in = 0.4;
  spec.p_out = 0.05;
  spec.feature_noise = 0.15;
  spec.seed = seed;
  return generate_synthetic(spec);
}

TrainConfig quick_config(int epochs = 25) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.hidden_dim = 8;
  cfg.augment.base_count = 6;
  cfg.augment.clique_size = 3;
  cfg.augment.candidate_size = 10;
  cfg.seed = 5;
  cfg.record_auc = false;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("evaluate_auc: perfect ranking scores one, all ties scores half") {
  const std::vector<double> perfect = {0.9, 0.8, 0.1, 0.2};
  const std::vector<std::uint8_t> labels = {1, 1, 0, 0};
  CHECK(evaluate_auc(perfect, labels) == 1.0);

  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  CHECK(evaluate_auc(flat, labels) == 0.5);
}

TEST_CASE("evaluate_auc equals the brute-force pair count exactly, mean near half") {
  Rng rng(101);
  double mean = 0.0;
  int trials = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + rng.uniform_int(49);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
    bool has0 = false, has1 = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid forces plenty of ties.
      scores[static_cast<std::size_t>(i)] = rng.uniform_int(8) / 8.0;
      labels[static_cast<std::size_t>(i)] = rng.uniform01() < 0.4 ? 1 : 0;
      (labels[static_cast<std::size_t>(i)] ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    const double fast = evaluate_auc(scores, labels);
    CHECK(fast == brute_force_auc(scores, labels));
    mean += fast;
    ++trials;
  }
  CHECK(std::fabs(mean / trials - 0.5) < 0.05);
}

TEST_CASE("evaluate_auc rejects single-class labels and length mismatch") {
  const std::vector<double> scores = {0.1, 0.2};
  CHECK_THROWS_AS(evaluate_auc(scores, std::vector<std::uint8_t>{1, 1}), ContractError);
  CHECK_THROWS_AS(evaluate_auc(scores, std::vector<std::uint8_t>{0, 0}), ContractError);
  CHECK_THROWS_AS(evaluate_auc(scores, std::vector<std::uint8_t>{0, 1, 0}), ContractError);
}

TEST_CASE("evaluate_auc is invariant under strictly increasing transforms") {
  Rng rng(103);
  std::vector<double> scores(40);
  std::vector<std::uint8_t> labels(40);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform(-2.0, 2.0);
    labels[i] = i % 3 == 0;
  }
  std::vector<double> warped = scores;
  for (double& s : warped) s = std::exp(0.7 * s) + 3.0;
  CHECK(evaluate_auc(scores, labels) == evaluate_auc(warped, labels));
}

TEST_CASE("rank_nodes: descending scores, ascending id on ties") {
  const std::vector<double> scores = {0.1, 0.9, 0.5};
  CHECK(rank_nodes(scores) == std::vector<int>{1, 2, 0});

  const std::vector<double> tied = {0.3, 0.7, 0.3, 0.7};
  CHECK(rank_nodes(tied) == std::vector<int>{1, 3, 0, 2});

  // top-k prefix is the k largest
  const std::vector<double> many = {5, 1, 4, 2, 3};
  const std::vector<int> order = rank_nodes(many);
  CHECK(order[0] == 0);
  CHECK(order[1] == 2);
  CHECK(order[2] == 4);
}

TEST_CASE("training reduces the total loss and records epoch metrics") {
  const AttributedGraph g = train_graph(60, 21);
  const TrainConfig cfg = quick_config(30);
  const TrainResult result = train(g, cfg);
  REQUIRE(result.history.size() == 30);
  CHECK(result.history.back().l_total < result.history.front().l_total);
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const EpochMetrics& em = result.history[i];
    CHECK(em.epoch == static_cast<int>(i) + 1);
    CHECK(em.l_sc == em.l_struct + em.l_feat);
    CHECK(em.l_total == cfg.objective.lambda_rec * em.l_rec + cfg.objective.lambda_sc * em.l_sc);
    CHECK(std::isfinite(em.l_total));
  }
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const AttributedGraph g = train_graph(40, 22);
  const TrainConfig cfg = quick_config(12);
  const TrainResult a = train(g, cfg);
  const TrainResult b = train(g, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].l_total == b.history[i].l_total);
    CHECK(a.history[i].l_rec == b.history[i].l_rec);
    CHECK(a.history[i].l_sc == b.history[i].l_sc);
  }
  const auto pa = a.params.entries();
  const auto pb = b.params.entries();
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k].second->v == pb[k].second->v);

  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  const TrainResult c = train(g, other);
  CHECK(c.history.back().l_total != a.history.back().l_total);
}

TEST_CASE("no_contrastive ablation reports zero contrastive loss every epoch") {
  const AttributedGraph g = train_graph(40, 23);
  TrainConfig cfg = quick_config(10);
  cfg.ablation = Ablation::kNoContrastive;
  const TrainResult result = train(g, cfg);
  for (const EpochMetrics& em : result.history) {
    CHECK(em.l_sc == 0.0);
    CHECK(em.l_struct == 0.0);
    CHECK(em.l_feat == 0.0);
    CHECK(em.l_total == cfg.objective.lambda_rec * em.l_rec);
  }
}

TEST_CASE("defaults carry the documented training constants") {
  const TrainConfig cfg;
  CHECK(cfg.epochs == 200);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.hidden_dim == 128);
  CHECK(cfg.objective.margin == 0.5);
}

TEST_CASE("per-epoch AUC appears when ground truth has both classes") {
  AttributedGraph g = train_graph(40, 24);
  std::vector<std::uint8_t> y(40, 0);
  y[3] = y[17] = 1;
  g.set_ground_truth(y);
  TrainConfig cfg = quick_config(5);
  cfg.record_auc = true;
  const TrainResult result = train(g, cfg);
  for (const EpochMetrics& em : result.history) {
    REQUIRE(em.auc.has_value());
    CHECK(*em.auc >= 0.0);
    CHECK(*em.auc <= 1.0);
  }
}

TEST_CASE("train diverges loudly under an absurd learning rate") {
  // Adam keeps step sizes near lr, so only an lr at the edge of double range
  // pushes the forward products past overflow.
  const AttributedGraph g = train_graph(30, 25);
  TrainConfig cfg = quick_config(60);
  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train(g, cfg), DivergenceError);
}

TEST_CASE("metrics and score files are written in the documented shapes") {
  const AttributedGraph g = train_graph(30, 26);
  TrainConfig cfg = quick_config(4);
  const TrainResult result = train(g, cfg);

  TempDir tmp("metrics");
  write_metrics(result.history, tmp.path("metrics.txt"));
  const std::string metrics = dcor::test::slurp(tmp.path("metrics.txt"));
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 4);
  CHECK(metrics.find("epoch=1 l_rec=") != std::string::npos);
  CHECK(metrics.find("l_total=") != std::string::npos);

  const std::vector<double> scores = {0.25, 0.5, 0.125};
  write_scores(scores, tmp.path("scores.txt"));
  CHECK(dcor::test::slurp(tmp.path("scores.txt")) == "1 0.5 1\n0 0.25 2\n2 0.125 3\n");
}

TEST_CASE("resampled views change the contrastive target mid-run") {
  const AttributedGraph g = train_graph(40, 27);
  TrainConfig cfg = quick_config(9);
  cfg.resample_view_every = 3;
  const TrainResult result = train(g, cfg);
  // The structural contrastive loss jumps when the view is rebuilt.
  CHECK(result.history.size() == 9);
  CHECK(std::isfinite(result.history.back().l_total));
}

TEST_CASE("run_gradcheck passes its own gate on the default instance") {
  GradCheckConfig gc;
  const GradCheckResult result = run_gradcheck(gc);
  CHECK(result.per_param.size() == 8);
  CHECK(result.max_rel_err < 1e-3);
}

}  // TEST_SUITE

#include <fstream>

#include "doctest.h"
#include "dcor/errors.hpp"
#include "dcor/runconfig.hpp"
#include "test_support.hpp"

using namespace dcor;
using dcor::test::TempDir;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_SUITE("runconfig") {

TEST_CASE("parse_file reads known keys and keeps defaults for the rest") {
  TempDir tmp("cfg");
  write_file(tmp.path("run.cfg"),
             "# comment\n"
             "n = 120\n"
             "alpha = 0.9\n"
             "epochs=50\n"
             "ablation=no_contrastive\n"
             "seed = 42\n");
  const RunConfig cfg = RunConfig::parse_file(tmp.path("run.cfg"));
  CHECK(cfg.synth.n == 120);
  CHECK(cfg.train.objective.alpha == 0.9);
  CHECK(cfg.train.epochs == 50);
  CHECK(cfg.train.ablation == Ablation::kNoContrastive);
  CHECK(cfg.seed == 42);
  CHECK(cfg.synth.seed == 42);
  CHECK(cfg.train.seed == 42);
  // untouched defaults
  CHECK(cfg.synth.d == 32);
  CHECK(cfg.train.learning_rate == 0.01);
  CHECK(cfg.train.hidden_dim == 128);
  CHECK(cfg.train.objective.margin == 0.5);
}

TEST_CASE("unknown and duplicate keys are rejected by name") {
  TempDir tmp("badcfg");
  write_file(tmp.path("unknown.cfg"), "learning_rte=0.1\n");
  CHECK_THROWS_WITH_AS(RunConfig::parse_file(tmp.path("unknown.cfg")),
                       doctest::Contains("learning_rte"), ConfigError);

  write_file(tmp.path("dup.cfg"), "epochs=10\nepochs=20\n");
  CHECK_THROWS_WITH_AS(RunConfig::parse_file(tmp.path("dup.cfg")), doctest::Contains("duplicate"),
                       ConfigError);

  write_file(tmp.path("noeq.cfg"), "epochs 10\n");
  CHECK_THROWS_AS(RunConfig::parse_file(tmp.path("noeq.cfg")), ConfigError);

  write_file(tmp.path("badval.cfg"), "epochs=ten\n");
  CHECK_THROWS_WITH_AS(RunConfig::parse_file(tmp.path("badval.cfg")), doctest::Contains("epochs"),
                       ConfigError);
}

TEST_CASE("write_resolved echoes every key including untouched defaults") {
  TempDir tmp("resolved");
  write_file(tmp.path("run.cfg"), "epochs=7\n");
  const RunConfig cfg = RunConfig::parse_file(tmp.path("run.cfg"));
  cfg.write_resolved(tmp.path("resolved.txt"));
  const std::string text = dcor::test::slurp(tmp.path("resolved.txt"));
  CHECK(text.find("epochs=7\n") != std::string::npos);
  CHECK(text.find("learning_rate=0.01") != std::string::npos);
  CHECK(text.find("margin=0.5") != std::string::npos);
  CHECK(text.find("hidden_dim=128") != std::string::npos);
  CHECK(text.find("normalize=auto") != std::string::npos);
  CHECK(text.find("contrast_target=recon_vs_recon") != std::string::npos);
  CHECK(text.find("ablation=full") != std::string::npos);
}

TEST_CASE("round-trip: a resolved config parses back to the same values") {
  TempDir tmp("cycle");
  write_file(tmp.path("run.cfg"), "epochs=9\nlambda_rec=0.8\nlambda_sc=0.9\nnormalize=off\n");
  const RunConfig cfg = RunConfig::parse_file(tmp.path("run.cfg"));
  cfg.write_resolved(tmp.path("resolved.txt"));
  const RunConfig back = RunConfig::parse_file(tmp.path("resolved.txt"));
  CHECK(back.train.epochs == 9);
  CHECK(back.train.objective.lambda_rec == 0.8);
  CHECK(back.train.objective.lambda_sc == 0.9);
  CHECK(back.normalize == NormalizeMode::kOff);
  CHECK(back.seed == cfg.seed);
}

TEST_CASE("apply_seed reaches every seeded component") {
  RunConfig cfg;
  cfg.apply_seed(777);
  CHECK(cfg.seed == 777);
  CHECK(cfg.synth.seed == 777);
  CHECK(cfg.augment.seed == 777);
  CHECK(cfg.train.seed == 777);
}

}  // TEST_SUITE

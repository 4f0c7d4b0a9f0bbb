#include "dcor/runconfig.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "dcor/errors.hpp"

namespace dcor {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || errno != 0 || end != value.c_str() + value.size()) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || errno != 0 || end != value.c_str() + value.size()) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + value + "'");
  }
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  augment.seed = s;
  train.seed = s;
  train.augment.seed = s;  // train() derives the actual view seed from train.seed
}

RunConfig RunConfig::parse_file(const std::string& path) {
  RunConfig cfg;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> keys = {
      {"n", [&](const std::string& k, const std::string& v) { cfg.synth.n = static_cast<int>(to_int(k, v)); }},
      {"d", [&](const std::string& k, const std::string& v) { cfg.synth.d = static_cast<int>(to_int(k, v)); }},
      {"communities", [&](const std::string& k, const std::string& v) { cfg.synth.communities = static_cast<int>(to_int(k, v)); }},
      {"p_in", [&](const std::string& k, const std::string& v) { cfg.synth.p_in = to_double(k, v); }},
      {"p_out", [&](const std::string& k, const std::string& v) { cfg.synth.p_out = to_double(k, v); }},
      {"feature_noise", [&](const std::string& k, const std::string& v) { cfg.synth.feature_noise = to_double(k, v); }},
      {"normalize",
       [&](const std::string& k, const std::string& v) {
         if (v == "auto") {
           cfg.normalize = NormalizeMode::kAuto;
         } else {
           cfg.normalize = to_bool(k, v) ? NormalizeMode::kOn : NormalizeMode::kOff;
         }
       }},
      {"structure_anomaly_rate", [&](const std::string& k, const std::string& v) { cfg.augment.structure_rate = to_double(k, v); }},
      {"feature_anomaly_rate", [&](const std::string& k, const std::string& v) { cfg.augment.feature_rate = to_double(k, v); }},
      {"base_count", [&](const std::string& k, const std::string& v) { cfg.augment.base_count = static_cast<int>(to_int(k, v)); }},
      {"clique_size", [&](const std::string& k, const std::string& v) { cfg.augment.clique_size = static_cast<int>(to_int(k, v)); }},
      {"candidate_size", [&](const std::string& k, const std::string& v) { cfg.augment.candidate_size = static_cast<int>(to_int(k, v)); }},
      {"scale_factor", [&](const std::string& k, const std::string& v) { cfg.augment.scale_factor = to_double(k, v); }},
      {"alpha", [&](const std::string& k, const std::string& v) { cfg.train.objective.alpha = to_double(k, v); }},
      {"margin", [&](const std::string& k, const std::string& v) { cfg.train.objective.margin = to_double(k, v); }},
      {"lambda_rec", [&](const std::string& k, const std::string& v) { cfg.train.objective.lambda_rec = to_double(k, v); }},
      {"lambda_sc", [&](const std::string& k, const std::string& v) { cfg.train.objective.lambda_sc = to_double(k, v); }},
      {"contrast_target",
       [&](const std::string& k, const std::string& v) {
         if (v == "recon_vs_recon") {
           cfg.train.objective.contrast_target = ContrastTarget::kReconVsRecon;
         } else if (v == "data_vs_recon") {
           cfg.train.objective.contrast_target = ContrastTarget::kDataVsRecon;
         } else {
           throw ConfigError("config key '" + k + "': expected recon_vs_recon or data_vs_recon, got '" + v + "'");
         }
       }},
      {"epochs", [&](const std::string& k, const std::string& v) { cfg.train.epochs = static_cast<int>(to_int(k, v)); }},
      {"learning_rate", [&](const std::string& k, const std::string& v) { cfg.train.learning_rate = to_double(k, v); }},
      {"hidden_dim", [&](const std::string& k, const std::string& v) { cfg.train.hidden_dim = static_cast<int>(to_int(k, v)); }},
      {"ablation",
       [&](const std::string& k, const std::string& v) {
         const auto mode = parse_ablation(v);
         if (!mode) throw ConfigError("config key '" + k + "': unknown ablation '" + v + "'");
         cfg.train.ablation = *mode;
       }},
      {"resample_view_every", [&](const std::string& k, const std::string& v) { cfg.train.resample_view_every = static_cast<int>(to_int(k, v)); }},
      {"record_auc", [&](const std::string& k, const std::string& v) { cfg.train.record_auc = to_bool(k, v); }},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.apply_seed(to_u64(k, v)); }},
      {"edges", [&](const std::string&, const std::string& v) { cfg.edges = v; }},
      {"features", [&](const std::string&, const std::string& v) { cfg.features = v; }},
      {"labels", [&](const std::string&, const std::string& v) { cfg.labels = v; }},
      {"checkpoint", [&](const std::string&, const std::string& v) { cfg.checkpoint = v; }},
      {"scores", [&](const std::string&, const std::string& v) { cfg.scores = v; }},
  };

  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::string line;
  int line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    }
    const std::string key = trimmed(t.substr(0, eq));
    const std::string value = trimmed(t.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    for (const std::string& s : seen) {
      if (s == key) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate config key '" + key + "'");
      }
    }
    seen.push_back(key);
    it->second(key, value);
  }

  // The training view shares the augmentation knobs.
  cfg.train.augment = cfg.augment;
  cfg.train.augment.seed = cfg.train.seed;
  return cfg;
}

void RunConfig::write_resolved(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "# resolved configuration (defaults filled in)\n";
  out << "n=" << synth.n << "\n";
  out << "d=" << synth.d << "\n";
  out << "communities=" << synth.communities << "\n";
  out << "p_in=" << format_double(synth.p_in) << "\n";
  out << "p_out=" << format_double(synth.p_out) << "\n";
  out << "feature_noise=" << format_double(synth.feature_noise) << "\n";
  out << "normalize=" << (normalize == NormalizeMode::kAuto ? "auto" : normalize == NormalizeMode::kOn ? "on" : "off") << "\n";
  out << "structure_anomaly_rate=" << format_double(augment.structure_rate) << "\n";
  out << "feature_anomaly_rate=" << format_double(augment.feature_rate) << "\n";
  out << "base_count=" << augment.base_count << "\n";
  out << "clique_size=" << augment.clique_size << "\n";
  out << "candidate_size=" << augment.candidate_size << "\n";
  out << "scale_factor=" << format_double(augment.scale_factor) << "\n";
  out << "alpha=" << format_double(train.objective.alpha) << "\n";
  out << "margin=" << format_double(train.objective.margin) << "\n";
  out << "lambda_rec=" << format_double(train.objective.lambda_rec) << "\n";
  out << "lambda_sc=" << format_double(train.objective.lambda_sc) << "\n";
  out << "contrast_target="
      << (train.objective.contrast_target == ContrastTarget::kReconVsRecon ? "recon_vs_recon" : "data_vs_recon")
      << "\n";
  out << "epochs=" << train.epochs << "\n";
  out << "learning_rate=" << format_double(train.learning_rate) << "\n";
  out << "hidden_dim=" << train.hidden_dim << "\n";
  out << "ablation=" << to_string(train.ablation) << "\n";
  out << "resample_view_every=" << train.resample_view_every << "\n";
  out << "record_auc=" << (train.record_auc ? "1" : "0") << "\n";
  out << "seed=" << seed << "\n";
  out << "edges=" << edges << "\n";
  out << "features=" << features << "\n";
  out << "labels=" << labels << "\n";
  out << "checkpoint=" << checkpoint << "\n";
  out << "scores=" << scores << "\n";
}

}  // namespace dcor

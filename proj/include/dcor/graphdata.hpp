#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcor/matrix.hpp"
#include "dcor/numcore.hpp"
#include "dcor/rng.hpp"

namespace dcor {

// Undirected attributed graph: symmetric binary adjacency (kept as sorted
// neighbor lists, densified on demand) plus an n x d feature matrix and
// optional per-node anomaly labels. The decoder math materializes n x n, so
// the practical node-count ceiling is a few thousand.
//
// Treat graphs as immutable once built; the mutating methods exist so that
// loaders and augmentation can assemble working copies.
class AttributedGraph {
 public:
  AttributedGraph() = default;
  AttributedGraph(int n, Matrix features);

  // Assembles a graph without validating invariants (IO and tests; run
  // validate() to check the result).
  static AttributedGraph from_raw(int n, std::vector<std::vector<int>> adjacency, Matrix features,
                                  std::optional<std::vector<std::uint8_t>> ground_truth);

  int node_count() const { return n_; }
  int feature_dim() const { return features_.cols; }

  bool has_edge(int u, int v) const;
  void add_edge(int u, int v);     // idempotent; rejects self-loops and bad ids
  void remove_edge(int u, int v);  // no-op when absent
  void isolate(int v);             // drops every incident edge
  int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
  const std::vector<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }
  long edge_count() const;

  Matrix dense_adjacency() const;
  NeighborLists neighbor_lists(bool include_self) const;

  const Matrix& features() const { return features_; }
  Matrix& mutable_features() { return features_; }

  const std::optional<std::vector<std::uint8_t>>& ground_truth() const { return ground_truth_; }
  void set_ground_truth(std::vector<std::uint8_t> labels);

 private:
  void check_node(int v, const char* op) const;

  int n_ = 0;
  std::vector<std::vector<int>> adj_;
  Matrix features_;
  std::optional<std::vector<std::uint8_t>> ground_truth_;
};

// Planted-partition generator parameters: `communities` equal blocks, within-block
// edge probability p_in, cross-block p_out, features = one-hot community
// direction plus Gaussian noise.
struct SynthSpec {
  int n = 500;
  int d = 32;
  int communities = 4;
  double p_in = 0.15;
  double p_out = 0.01;
  double feature_noise = 0.05;
  std::uint64_t seed = 1;
};

struct LoadStats {
  int self_loops_dropped = 0;
  int duplicate_edges = 0;
};

// Edge list: one "u v" pair of 0-based ids per line, '#' lines ignored.
// Features: headerless CSV, one row per node. Labels: one 0/1 per line.
AttributedGraph load_graph(const std::string& edge_path, const std::string& feature_path,
                           const std::string& label_path = {}, LoadStats* stats = nullptr);
void save_graph(const AttributedGraph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path = {});

// Every invariant violation found, not just the first; empty means ok.
std::vector<std::string> validate(const AttributedGraph& g);

// Per-column min-max scaling to [0, 1]; constant columns map to 0.
AttributedGraph normalize_features(const AttributedGraph& g);

AttributedGraph generate_synthetic(const SynthSpec& spec);

// 17 significant digits: exact double round-trip in text form.
std::string format_double(double x);

}  // namespace dcor

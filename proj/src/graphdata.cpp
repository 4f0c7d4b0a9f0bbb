#include "dcor/graphdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dcor/errors.hpp"

namespace dcor {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& tok, long* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (errno != 0 || end != tok.c_str() + tok.size()) return false;
  *out = v;
  return true;
}

bool parse_num(const std::string& tok, double* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) return false;
  *out = v;
  return true;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

AttributedGraph::AttributedGraph(int n, Matrix features) : n_(n), features_(std::move(features)) {
  if (features_.rows != n) {
    throw DimensionError("AttributedGraph: feature rows " + std::to_string(features_.rows) +
                         " != node count " + std::to_string(n));
  }
  adj_.resize(static_cast<std::size_t>(n));
}

AttributedGraph AttributedGraph::from_raw(int n, std::vector<std::vector<int>> adjacency, Matrix features,
                                          std::optional<std::vector<std::uint8_t>> ground_truth) {
  AttributedGraph g;
  g.n_ = n;
  g.adj_ = std::move(adjacency);
  g.features_ = std::move(features);
  g.ground_truth_ = std::move(ground_truth);
  return g;
}

void AttributedGraph::check_node(int v, const char* op) const {
  if (v < 0 || v >= n_) {
    throw ContractError(std::string(op) + ": node id " + std::to_string(v) + " out of range [0, " +
                        std::to_string(n_) + ")");
  }
}

bool AttributedGraph::has_edge(int u, int v) const {
  check_node(u, "has_edge");
  check_node(v, "has_edge");
  const auto& lst = adj_[static_cast<std::size_t>(u)];
  return std::binary_search(lst.begin(), lst.end(), v);
}

void AttributedGraph::add_edge(int u, int v) {
  check_node(u, "add_edge");
  check_node(v, "add_edge");
  if (u == v) throw ContractError("add_edge: self-loop on node " + std::to_string(u));
  auto insert = [](std::vector<int>& lst, int x) {
    auto it = std::lower_bound(lst.begin(), lst.end(), x);
    if (it == lst.end() || *it != x) lst.insert(it, x);
  };
  insert(adj_[static_cast<std::size_t>(u)], v);
  insert(adj_[static_cast<std::size_t>(v)], u);
}

void AttributedGraph::remove_edge(int u, int v) {
  check_node(u, "remove_edge");
  check_node(v, "remove_edge");
  auto erase = [](std::vector<int>& lst, int x) {
    auto it = std::lower_bound(lst.begin(), lst.end(), x);
    if (it != lst.end() && *it == x) lst.erase(it);
  };
  erase(adj_[static_cast<std::size_t>(u)], v);
  erase(adj_[static_cast<std::size_t>(v)], u);
}

void AttributedGraph::isolate(int v) {
  check_node(v, "isolate");
  const std::vector<int> nbrs = adj_[static_cast<std::size_t>(v)];
  for (int u : nbrs) remove_edge(v, u);
}

long AttributedGraph::edge_count() const {
  long twice = 0;
  for (const auto& lst : adj_) twice += static_cast<long>(lst.size());
  return twice / 2;
}

Matrix AttributedGraph::dense_adjacency() const {
  Matrix a(n_, n_);
  for (int u = 0; u < n_; ++u) {
    for (int v : adj_[static_cast<std::size_t>(u)]) a(u, v) = 1.0;
  }
  return a;
}

NeighborLists AttributedGraph::neighbor_lists(bool include_self) const {
  NeighborLists nl;
  nl.offsets.resize(static_cast<std::size_t>(n_) + 1, 0);
  std::size_t total = 0;
  for (int i = 0; i < n_; ++i) total += adj_[static_cast<std::size_t>(i)].size() + (include_self ? 1 : 0);
  nl.targets.reserve(total);
  for (int i = 0; i < n_; ++i) {
    const auto& lst = adj_[static_cast<std::size_t>(i)];
    bool placed = !include_self;
    for (int v : lst) {
      if (!placed && i < v) {
        nl.targets.push_back(i);
        placed = true;
      }
      nl.targets.push_back(v);
    }
    if (!placed) nl.targets.push_back(i);
    nl.offsets[static_cast<std::size_t>(i) + 1] = static_cast<int>(nl.targets.size());
  }
  return nl;
}

void AttributedGraph::set_ground_truth(std::vector<std::uint8_t> labels) {
  if (static_cast<int>(labels.size()) != n_) {
    throw ContractError("set_ground_truth: label count " + std::to_string(labels.size()) +
                        " != node count " + std::to_string(n_));
  }
  ground_truth_ = std::move(labels);
}

AttributedGraph load_graph(const std::string& edge_path, const std::string& feature_path,
                           const std::string& label_path, LoadStats* stats) {
  // Features first: their row count defines n.
  std::ifstream fin = open_or_throw(feature_path);
  std::vector<double> values;
  int d = -1;
  int line_no = 0;
  std::string line;
  while (std::getline(fin, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty()) continue;
    std::stringstream ss(t);
    std::string cell;
    int width = 0;
    while (std::getline(ss, cell, ',')) {
      double x;
      if (!parse_num(trimmed(cell), &x)) {
        throw ParseError(feature_path + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                         trimmed(cell) + "'");
      }
      values.push_back(x);
      ++width;
    }
    if (d < 0) {
      d = width;
    } else if (width != d) {
      throw ParseError(feature_path + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                       " columns, got " + std::to_string(width));
    }
  }
  if (d <= 0) throw ParseError(feature_path + ": no feature rows");
  const int n = static_cast<int>(values.size()) / d;
  Matrix features(n, d);
  features.v = std::move(values);

  AttributedGraph g(n, std::move(features));

  std::ifstream ein = open_or_throw(edge_path);
  LoadStats local;
  line_no = 0;
  while (std::getline(ein, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    std::stringstream ss(t);
    std::string a, b, extra;
    ss >> a >> b;
    if (b.empty() || (ss >> extra)) {
      throw ParseError(edge_path + ":" + std::to_string(line_no) +
                       ": expected exactly two node ids, got '" + t + "'");
    }
    long u, v;
    if (!parse_int(a, &u) || !parse_int(b, &v)) {
      throw ParseError(edge_path + ":" + std::to_string(line_no) + ": non-integer node id in '" + t + "'");
    }
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ParseError(edge_path + ":" + std::to_string(line_no) + ": node id out of range [0, " +
                       std::to_string(n) + ") in '" + t + "'");
    }
    if (u == v) {
      ++local.self_loops_dropped;
      continue;
    }
    if (g.has_edge(static_cast<int>(u), static_cast<int>(v))) {
      ++local.duplicate_edges;
      continue;
    }
    g.add_edge(static_cast<int>(u), static_cast<int>(v));
  }

  if (!label_path.empty()) {
    std::ifstream lin = open_or_throw(label_path);
    std::vector<std::uint8_t> labels;
    line_no = 0;
    while (std::getline(lin, line)) {
      ++line_no;
      const std::string t = trimmed(line);
      if (t.empty()) continue;
      long v;
      if (!parse_int(t, &v) || (v != 0 && v != 1)) {
        throw ParseError(label_path + ":" + std::to_string(line_no) + ": expected 0 or 1, got '" + t + "'");
      }
      labels.push_back(static_cast<std::uint8_t>(v));
    }
    if (static_cast<int>(labels.size()) != n) {
      throw ParseError(label_path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n) +
                       " labels, got " + std::to_string(labels.size()));
    }
    g.set_ground_truth(std::move(labels));
  }

  if (stats) *stats = local;
  return g;
}

void save_graph(const AttributedGraph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path) {
  std::ofstream eout(edge_path);
  if (!eout) throw ParseError(edge_path + ": cannot open for writing");
  for (int u = 0; u < g.node_count(); ++u) {
    for (int v : g.neighbors(u)) {
      if (u < v) eout << u << " " << v << "\n";
    }
  }

  std::ofstream fout(feature_path);
  if (!fout) throw ParseError(feature_path + ": cannot open for writing");
  const Matrix& x = g.features();
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) {
      if (j) fout << ",";
      fout << format_double(x(i, j));
    }
    fout << "\n";
  }

  if (!label_path.empty()) {
    if (!g.ground_truth()) throw ContractError("save_graph: no ground-truth labels to write");
    std::ofstream lout(label_path);
    if (!lout) throw ParseError(label_path + ": cannot open for writing");
    for (std::uint8_t y : *g.ground_truth()) lout << static_cast<int>(y) << "\n";
  }
}

std::vector<std::string> validate(const AttributedGraph& g) {
  std::vector<std::string> bad;
  const int n = g.node_count();
  if (g.features().rows != n) {
    bad.push_back("feature rows " + std::to_string(g.features().rows) + " != node count " + std::to_string(n));
  }
  if (!g.features().all_finite()) bad.push_back("features contain non-finite values");
  for (int u = 0; u < n; ++u) {
    const auto& lst = g.neighbors(u);
    for (std::size_t i = 0; i < lst.size(); ++i) {
      const int v = lst[i];
      if (v < 0 || v >= n) {
        bad.push_back("node " + std::to_string(u) + " lists out-of-range neighbor " + std::to_string(v));
        continue;
      }
      if (v == u) bad.push_back("node " + std::to_string(u) + " has a self-loop");
      if (i > 0 && lst[i - 1] >= v) {
        bad.push_back("node " + std::to_string(u) + " neighbor list not sorted/unique at " + std::to_string(v));
      }
      const auto& back = g.neighbors(v);
      if (!std::binary_search(back.begin(), back.end(), u)) {
        bad.push_back("asymmetric edge: " + std::to_string(u) + "->" + std::to_string(v) +
                      " present, reverse missing");
      }
    }
  }
  if (g.ground_truth()) {
    if (static_cast<int>(g.ground_truth()->size()) != n) {
      bad.push_back("ground-truth length " + std::to_string(g.ground_truth()->size()) + " != node count " +
                    std::to_string(n));
    }
    for (std::uint8_t y : *g.ground_truth()) {
      if (y != 0 && y != 1) {
        bad.push_back("ground-truth value " + std::to_string(static_cast<int>(y)) + " not in {0,1}");
        break;
      }
    }
  }
  return bad;
}

AttributedGraph normalize_features(const AttributedGraph& g) {
  Matrix x = g.features();
  for (int j = 0; j < x.cols; ++j) {
    double lo = x(0, j), hi = x(0, j);
    for (int i = 1; i < x.rows; ++i) {
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    const double range = hi - lo;
    for (int i = 0; i < x.rows; ++i) {
      x(i, j) = range > 0.0 ? (x(i, j) - lo) / range : 0.0;
    }
  }
  std::vector<std::vector<int>> adj;
  adj.reserve(static_cast<std::size_t>(g.node_count()));
  for (int u = 0; u < g.node_count(); ++u) adj.push_back(g.neighbors(u));
  return AttributedGraph::from_raw(g.node_count(), std::move(adj), std::move(x), g.ground_truth());
}

AttributedGraph generate_synthetic(const SynthSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw ConfigError("generate_synthetic: n and d must be >= 1");
  if (spec.communities < 1) throw ConfigError("generate_synthetic: communities must be >= 1");
  if (!(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0)) {
    throw ConfigError("generate_synthetic: need 0 <= p_out <= p_in <= 1, got p_in=" +
                      format_double(spec.p_in) + " p_out=" + format_double(spec.p_out));
  }
  if (spec.feature_noise < 0.0) throw ConfigError("generate_synthetic: feature_noise must be >= 0");

  Rng rng(spec.seed);
  const auto community = [&](int i) {
    return static_cast<int>((static_cast<long>(i) * spec.communities) / spec.n);
  };

  Matrix x(spec.n, spec.d);
  for (int i = 0; i < spec.n; ++i) {
    const int axis = community(i) % spec.d;
    for (int j = 0; j < spec.d; ++j) {
      x(i, j) = (j == axis ? 1.0 : 0.0) + rng.normal(0.0, spec.feature_noise);
    }
  }

  AttributedGraph g(spec.n, std::move(x));
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      const double p = community(i) == community(j) ? spec.p_in : spec.p_out;
      if (rng.uniform01() < p) g.add_edge(i, j);
    }
  }
  g.set_ground_truth(std::vector<std::uint8_t>(static_cast<std::size_t>(spec.n), 0));
  return g;
}

}  // namespace dcor

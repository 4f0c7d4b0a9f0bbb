#include "dcor/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "dcor/errors.hpp"
#include "dcor/rng.hpp"

namespace dcor {

namespace {

constexpr const char* kCheckpointMagic = "dcor-checkpoint";
constexpr int kCheckpointVersion = 1;

void require_shape(const Matrix& m, int rows, int cols, const std::string& name) {
  if (m.rows != rows || m.cols != cols) {
    throw DimensionError("params: " + name + " must be " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + shape_str(m));
  }
}

}  // namespace

DcorParams DcorParams::init(int n, int d, int h, std::uint64_t seed) {
  if (n < 1 || d < 1 || h < 1) throw ConfigError("DcorParams::init: n, d, h must all be >= 1");
  DcorParams p;
  p.n = n;
  p.d = d;
  p.h = h;
  p.w_v1 = Matrix(d, h);
  p.b_v1 = Matrix(1, h);
  p.w_v2 = Matrix(h, h);
  p.attn = Matrix(2 * h, 1);
  p.w_a1 = Matrix(n, h);
  p.b_a1 = Matrix(1, h);
  p.w_a2 = Matrix(h, h);
  p.b_a2 = Matrix(1, h);

  Rng rng(seed);
  for (auto& [name, m] : p.entries()) {
    (void)name;
    const double bound = std::sqrt(6.0 / (m->rows + m->cols));
    for (double& x : m->v) x = rng.uniform(-bound, bound);
  }
  return p;
}

std::vector<std::pair<std::string, Matrix*>> DcorParams::entries() {
  return {{"w_v1", &w_v1}, {"b_v1", &b_v1}, {"w_v2", &w_v2}, {"attn", &attn},
          {"w_a1", &w_a1}, {"b_a1", &b_a1}, {"w_a2", &w_a2}, {"b_a2", &b_a2}};
}

std::vector<std::pair<std::string, const Matrix*>> DcorParams::entries() const {
  return {{"w_v1", &w_v1}, {"b_v1", &b_v1}, {"w_v2", &w_v2}, {"attn", &attn},
          {"w_a1", &w_a1}, {"b_a1", &b_a1}, {"w_a2", &w_a2}, {"b_a2", &b_a2}};
}

void DcorParams::check_shapes(const AttributedGraph& g) const {
  if (g.node_count() != n) {
    throw DimensionError("params: built for n=" + std::to_string(n) + " nodes, graph has " +
                         std::to_string(g.node_count()));
  }
  if (g.feature_dim() != d) {
    throw DimensionError("params: built for d=" + std::to_string(d) + " features, graph has " +
                         std::to_string(g.feature_dim()));
  }
  require_shape(w_v1, d, h, "w_v1");
  require_shape(b_v1, 1, h, "b_v1");
  require_shape(w_v2, h, h, "w_v2");
  require_shape(attn, 2 * h, 1, "attn");
  require_shape(w_a1, n, h, "w_a1");
  require_shape(b_a1, 1, h, "b_a1");
  require_shape(w_a2, h, h, "w_a2");
  require_shape(b_a2, 1, h, "b_a2");
}

void save_checkpoint(const DcorParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << kCheckpointMagic << " " << kCheckpointVersion << "\n";
  out << params.n << " " << params.d << " " << params.h << "\n";
  for (const auto& [name, m] : params.entries()) {
    out << name << " " << m->rows << " " << m->cols << "\n";
    for (int i = 0; i < m->rows; ++i) {
      for (int j = 0; j < m->cols; ++j) {
        if (j) out << " ";
        out << format_double((*m)(i, j));
      }
      out << "\n";
    }
  }
}

DcorParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != kCheckpointVersion) {
    throw ParseError(path + ": not a dcor checkpoint (or unsupported version)");
  }
  DcorParams p;
  in >> p.n >> p.d >> p.h;
  if (!in || p.n < 1 || p.d < 1 || p.h < 1) throw ParseError(path + ": bad checkpoint header");
  for (auto& [name, m] : p.entries()) {
    std::string got;
    int rows = 0, cols = 0;
    in >> got >> rows >> cols;
    if (!in || got != name) throw ParseError(path + ": expected parameter '" + name + "', got '" + got + "'");
    *m = Matrix(rows, cols);
    for (double& x : m->v) {
      std::string tok;
      in >> tok;
      char* end = nullptr;
      x = std::strtod(tok.c_str(), &end);
      if (!in || end != tok.c_str() + tok.size()) {
        throw ParseError(path + ": bad value in parameter '" + name + "'");
      }
    }
  }
  return p;
}

ParamNodes register_params(Tape& t, const DcorParams& params) {
  ParamNodes p;
  p.w_v1 = t.param(params.w_v1);
  p.b_v1 = t.param(params.b_v1);
  p.w_v2 = t.param(params.w_v2);
  p.attn = t.param(params.attn);
  p.w_a1 = t.param(params.w_a1);
  p.b_a1 = t.param(params.b_a1);
  p.w_a2 = t.param(params.w_a2);
  p.b_a2 = t.param(params.b_a2);
  return p;
}

ValueId structure_encode_on(Tape& t, const AttributedGraph& g, const ParamNodes& p, bool include_self) {
  const ValueId x = t.input(g.features());
  const ValueId hidden = t.leaky_relu(t.add(t.matmul(x, p.w_v1), p.b_v1), kLeakySlope);
  const int h = t.value(p.w_v1).cols;
  // a^T [W h_i || W h_j] splits into (h_i W^T a_src) + (h_j W^T a_dst).
  const ValueId w2t = t.transpose(p.w_v2);
  const ValueId row_score = t.matmul(hidden, t.matmul(w2t, t.slice_rows(p.attn, 0, h)));
  const ValueId col_score = t.matmul(hidden, t.matmul(w2t, t.slice_rows(p.attn, h, 2 * h)));
  auto nbrs = std::make_shared<NeighborLists>(g.neighbor_lists(include_self));
  return t.attention_aggregate(hidden, row_score, col_score, std::move(nbrs), kLeakySlope);
}

ValueId structure_decode_on(Tape& t, ValueId z_v) {
  return t.sigmoid(t.matmul(z_v, t.transpose(z_v)));
}

ValueId attribute_encode_on(Tape& t, const AttributedGraph& g, const ParamNodes& p) {
  if (t.value(p.w_a1).rows != g.node_count()) {
    throw DimensionError("attribute_encode: w_a1 has " + std::to_string(t.value(p.w_a1).rows) +
                         " rows, graph has " + std::to_string(g.node_count()) + " nodes");
  }
  const ValueId xt = t.transpose(t.input(g.features()));
  const ValueId hidden = t.leaky_relu(t.add(t.matmul(xt, p.w_a1), p.b_a1), kLeakySlope);
  return t.add(t.matmul(hidden, p.w_a2), p.b_a2);
}

ValueId attribute_decode_on(Tape& t, ValueId z_v, ValueId z_a) {
  const Matrix& zv = t.value(z_v);
  const Matrix& za = t.value(z_a);
  if (zv.cols != za.cols) {
    throw DimensionError("attribute_decode: latent dims disagree, Z_v " + shape_str(zv) + " vs Z_a " +
                         shape_str(za));
  }
  return t.matmul(z_v, t.transpose(z_a));
}

ForwardNodes forward_on(Tape& t, const AttributedGraph& g, const ParamNodes& p) {
  ForwardNodes f;
  f.z_v = structure_encode_on(t, g, p);
  f.a_hat = structure_decode_on(t, f.z_v);
  f.z_a = attribute_encode_on(t, g, p);
  f.x_hat = attribute_decode_on(t, f.z_v, f.z_a);
  return f;
}

namespace {

// Registers params as constants (no gradients) for the plain wrappers.
ParamNodes register_inputs(Tape& t, const DcorParams& params) {
  ParamNodes p;
  p.w_v1 = t.input(params.w_v1);
  p.b_v1 = t.input(params.b_v1);
  p.w_v2 = t.input(params.w_v2);
  p.attn = t.input(params.attn);
  p.w_a1 = t.input(params.w_a1);
  p.b_a1 = t.input(params.b_a1);
  p.w_a2 = t.input(params.w_a2);
  p.b_a2 = t.input(params.b_a2);
  return p;
}

}  // namespace

Matrix structure_encode(const AttributedGraph& g, const DcorParams& params) {
  params.check_shapes(g);
  Tape t;
  return t.value(structure_encode_on(t, g, register_inputs(t, params)));
}

Matrix structure_decode(const Matrix& z_v) {
  Tape t;
  return t.value(structure_decode_on(t, t.input(z_v)));
}

Matrix attribute_encode(const AttributedGraph& g, const DcorParams& params) {
  params.check_shapes(g);
  Tape t;
  return t.value(attribute_encode_on(t, g, register_inputs(t, params)));
}

Matrix attribute_decode(const Matrix& z_v, const Matrix& z_a) {
  Tape t;
  return t.value(attribute_decode_on(t, t.input(z_v), t.input(z_a)));
}

Reconstruction forward(const AttributedGraph& g, const DcorParams& params) {
  params.check_shapes(g);
  Tape t;
  const ForwardNodes f = forward_on(t, g, register_inputs(t, params));
  Reconstruction rec;
  rec.z_v = t.value(f.z_v);
  rec.a_hat = t.value(f.a_hat);
  rec.z_a = t.value(f.z_a);
  rec.x_hat = t.value(f.x_hat);
  return rec;
}

std::vector<std::string> check_reconstruction(const Reconstruction& rec, int n, int d, int h) {
  std::vector<std::string> bad;
  const auto expect = [&](const Matrix& m, int rows, int cols, const char* name) {
    if (m.rows != rows || m.cols != cols) {
      bad.push_back(std::string(name) + " is " + shape_str(m) + ", expected " + std::to_string(rows) +
                    "x" + std::to_string(cols));
      return false;
    }
    return true;
  };
  if (expect(rec.a_hat, n, n, "a_hat")) {
    double asym = 0.0;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        asym = std::max(asym, std::fabs(rec.a_hat(i, j) - rec.a_hat(j, i)));
        const double x = rec.a_hat(i, j);
        if (!(x > 0.0 && x < 1.0)) in_range = false;
      }
    }
    if (asym > 1e-12) bad.push_back("a_hat asymmetry " + format_double(asym) + " exceeds 1e-12");
    if (!in_range) bad.push_back("a_hat entries not strictly inside (0, 1)");
  }
  expect(rec.x_hat, n, d, "x_hat");
  expect(rec.z_v, n, h, "z_v");
  expect(rec.z_a, d, h, "z_a");
  for (const Matrix* m : {&rec.a_hat, &rec.x_hat, &rec.z_v, &rec.z_a}) {
    if (!m->all_finite()) {
      bad.push_back("reconstruction contains non-finite values");
      break;
    }
  }
  return bad;
}

}  // namespace dcor

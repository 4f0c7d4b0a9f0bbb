#include "dcor/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace dcor {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

// out += a * b, loop order i-k-j: each output entry accumulates over k in
// ascending order, matching the naive triple loop bit for bit.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const int n = a.rows, kk = a.cols, m = b.cols;
  for (int i = 0; i < n; ++i) {
    const double* arow = a.v.data() + static_cast<std::size_t>(i) * kk;
    double* crow = out.v.data() + static_cast<std::size_t>(i) * m;
    for (int k = 0; k < kk; ++k) {
      const double aik = arow[k];
      const double* brow = b.v.data() + static_cast<std::size_t>(k) * m;
      for (int j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
}

// Second operand is either same-shape or a 1xC row bias.
enum class Broadcast { kSame, kRow };

Broadcast binary_mode(const Matrix& a, const Matrix& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (b.rows == 1 && b.cols == a.cols) return Broadcast::kRow;
  throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are neither equal nor row-broadcastable");
}

}  // namespace

double sigmoid(double x) {
  x = std::clamp(x, -36.0, 36.0);
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

ValueId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(ValueId id) const { return nodes_[static_cast<std::size_t>(id)]; }

ValueId Tape::input(Matrix value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

ValueId Tape::param(Matrix value) {
  Node n;
  n.op = Op::kParam;
  n.value = std::move(value);
  n.requires_grad = true;
  const ValueId id = push(std::move(n));
  params_.push_back(id);
  return id;
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require(av.cols == bv.rows, "matmul: inner dimensions disagree, " + shape_str(av) + " * " + shape_str(bv));
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Matrix::zeros(av.rows, bv.cols);
  matmul_acc(av, bv, n.value);
  return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  const Broadcast mode = binary_mode(av, bv, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = av;
  if (mode == Broadcast::kSame) {
    for (std::size_t i = 0; i < n.value.v.size(); ++i) n.value.v[i] += bv.v[i];
  } else {
    for (int i = 0; i < av.rows; ++i) {
      for (int j = 0; j < av.cols; ++j) n.value(i, j) += bv(0, j);
    }
  }
  return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  const Broadcast mode = binary_mode(av, bv, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = av;
  if (mode == Broadcast::kSame) {
    for (std::size_t i = 0; i < n.value.v.size(); ++i) n.value.v[i] -= bv.v[i];
  } else {
    for (int i = 0; i < av.rows; ++i) {
      for (int j = 0; j < av.cols; ++j) n.value(i, j) -= bv(0, j);
    }
  }
  return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  const Broadcast mode = binary_mode(av, bv, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = av;
  if (mode == Broadcast::kSame) {
    for (std::size_t i = 0; i < n.value.v.size(); ++i) n.value.v[i] *= bv.v[i];
  } else {
    for (int i = 0; i < av.rows; ++i) {
      for (int j = 0; j < av.cols; ++j) n.value(i, j) *= bv(0, j);
    }
  }
  return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.scalar = c;
  n.requires_grad = node(a).requires_grad;
  n.value = value(a);
  for (double& x : n.value.v) x *= c;
  return push(std::move(n));
}

ValueId Tape::add_scalar(ValueId a, double c) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = a;
  n.scalar = c;
  n.requires_grad = node(a).requires_grad;
  n.value = value(a);
  for (double& x : n.value.v) x += c;
  return push(std::move(n));
}

ValueId Tape::sigmoid(ValueId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.requires_grad = node(a).requires_grad;
  n.value = value(a);
  for (double& x : n.value.v) x = dcor::sigmoid(x);
  return push(std::move(n));
}

ValueId Tape::leaky_relu(ValueId a, double slope) {
  Node n;
  n.op = Op::kLeakyRelu;
  n.a = a;
  n.scalar = slope;
  n.requires_grad = node(a).requires_grad;
  n.value = value(a);
  for (double& x : n.value.v) x = dcor::leaky_relu(x, slope);
  return push(std::move(n));
}

ValueId Tape::transpose(ValueId a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a;
  n.requires_grad = node(a).requires_grad;
  n.value = transposed(value(a));
  return push(std::move(n));
}

ValueId Tape::slice_rows(ValueId a, int row_begin, int row_end) {
  const Matrix& av = value(a);
  require(0 <= row_begin && row_begin < row_end && row_end <= av.rows,
          "slice_rows: range [" + std::to_string(row_begin) + ", " + std::to_string(row_end) +
              ") out of bounds for " + shape_str(av));
  Node n;
  n.op = Op::kSliceRows;
  n.a = a;
  n.row_begin = row_begin;
  n.row_end = row_end;
  n.requires_grad = node(a).requires_grad;
  n.value = Matrix(row_end - row_begin, av.cols);
  std::copy(av.v.begin() + static_cast<std::size_t>(row_begin) * av.cols,
            av.v.begin() + static_cast<std::size_t>(row_end) * av.cols, n.value.v.begin());
  return push(std::move(n));
}

ValueId Tape::masked_row_softmax(ValueId scores, std::vector<std::uint8_t> mask) {
  const Matrix& sv = value(scores);
  require(mask.size() == sv.v.size(),
          "masked_row_softmax: mask size " + std::to_string(mask.size()) + " does not match scores " + shape_str(sv));
  Node n;
  n.op = Op::kMaskedRowSoftmax;
  n.a = scores;
  n.requires_grad = node(scores).requires_grad;
  n.value = Matrix(sv.rows, sv.cols);
  for (int i = 0; i < sv.rows; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * sv.cols;
    double hi = -std::numeric_limits<double>::infinity();
    int live = 0;
    for (int j = 0; j < sv.cols; ++j) {
      if (mask[base + j]) {
        hi = std::max(hi, sv.v[base + j]);
        ++live;
      }
    }
    if (live == 0) {
      throw ContractError("masked_row_softmax: degenerate neighborhood, row " + std::to_string(i) +
                          " has no unmasked entries");
    }
    double total = 0.0;
    for (int j = 0; j < sv.cols; ++j) {
      if (mask[base + j]) total += std::exp(sv.v[base + j] - hi);
    }
    const double inv = 1.0 / total;
    for (int j = 0; j < sv.cols; ++j) {
      n.value.v[base + j] = mask[base + j] ? std::exp(sv.v[base + j] - hi) * inv : 0.0;
    }
  }
  n.mask = std::move(mask);
  return push(std::move(n));
}

ValueId Tape::row_distance(ValueId a, ValueId b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require(av.same_shape(bv), "row_distance: shapes " + shape_str(av) + " and " + shape_str(bv) + " differ");
  require(av.cols >= 1, "row_distance: rows must have length >= 1");
  Node n;
  n.op = Op::kRowDistance;
  n.a = a;
  n.b = b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Matrix(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double ss = 0.0;
    const double* ar = av.v.data() + static_cast<std::size_t>(i) * av.cols;
    const double* br = bv.v.data() + static_cast<std::size_t>(i) * av.cols;
    for (int j = 0; j < av.cols; ++j) {
      const double e = ar[j] - br[j];
      ss += e * e;
    }
    n.value(i, 0) = std::sqrt(ss / av.cols);
  }
  return push(std::move(n));
}

ValueId Tape::attention_aggregate(ValueId hidden, ValueId row_score, ValueId col_score,
                                  std::shared_ptr<const NeighborLists> nbrs, double slope) {
  const Matrix& hv = value(hidden);
  const Matrix& pv = value(row_score);
  const Matrix& qv = value(col_score);
  const int nn = hv.rows;
  require(pv.rows == nn && pv.cols == 1, "attention_aggregate: row_score must be " + std::to_string(nn) + "x1, got " + shape_str(pv));
  require(qv.rows == nn && qv.cols == 1, "attention_aggregate: col_score must be " + std::to_string(nn) + "x1, got " + shape_str(qv));
  require(nbrs && nbrs->rows() == nn, "attention_aggregate: neighbor lists do not match hidden rows");

  Node n;
  n.op = Op::kAttentionAggregate;
  n.a = hidden;
  n.b = row_score;
  n.c = col_score;
  n.scalar = slope;
  n.nbrs = nbrs;
  n.requires_grad = node(hidden).requires_grad || node(row_score).requires_grad || node(col_score).requires_grad;
  n.value = Matrix(nn, hv.cols);

  std::vector<double> w;  // per-edge weights, row at a time
  for (int i = 0; i < nn; ++i) {
    const int lo = nbrs->offsets[i], hix = nbrs->offsets[i + 1];
    if (lo == hix) {
      throw ContractError("attention_aggregate: degenerate neighborhood, node " + std::to_string(i) +
                          " has no neighbors");
    }
    w.resize(static_cast<std::size_t>(hix - lo));
    double top = -std::numeric_limits<double>::infinity();
    for (int e = lo; e < hix; ++e) {
      const double s = dcor::leaky_relu(pv(i, 0) + qv(nbrs->targets[static_cast<std::size_t>(e)], 0), slope);
      w[static_cast<std::size_t>(e - lo)] = s;
      top = std::max(top, s);
    }
    double total = 0.0;
    for (double& x : w) {
      x = std::exp(x - top);
      total += x;
    }
    const double inv = 1.0 / total;
    double* out = n.value.v.data() + static_cast<std::size_t>(i) * hv.cols;
    for (int e = lo; e < hix; ++e) {
      const double gamma = w[static_cast<std::size_t>(e - lo)] * inv;
      const double* hrow = hv.v.data() + static_cast<std::size_t>(nbrs->targets[static_cast<std::size_t>(e)]) * hv.cols;
      for (int j = 0; j < hv.cols; ++j) out[j] += gamma * hrow[j];
    }
  }
  return push(std::move(n));
}

ValueId Tape::sum(ValueId a) {
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.requires_grad = node(a).requires_grad;
  n.value = Matrix(1, 1);
  double total = 0.0;
  for (double x : value(a).v) total += x;
  n.value(0, 0) = total;
  return push(std::move(n));
}

const Matrix& Tape::value(ValueId id) const { return node(id).value; }

bool Tape::has_grad(ValueId id) const { return node(id).grad_live; }

const Matrix& Tape::grad(ValueId id) const {
  if (!node(id).grad_live) {
    throw ContractError("grad: node " + std::to_string(id) + " has no gradient (not reachable from the loss?)");
  }
  return node(id).grad;
}

Matrix& Tape::ensure_grad(ValueId id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad_live) {
    n.grad = Matrix::zeros(n.value.rows, n.value.cols);
    n.grad_live = true;
  }
  return n.grad;
}

void Tape::backward(ValueId loss) {
  const Matrix& lv = value(loss);
  if (lv.rows != 1 || lv.cols != 1) {
    throw ContractError("backward: loss must be 1x1, got " + shape_str(lv));
  }
  for (Node& n : nodes_) n.grad_live = false;
  ensure_grad(loss)(0, 0) = 1.0;
  for (ValueId id = loss; id >= 0; --id) {
    const Node& n = node(id);
    if (!n.grad_live || !n.requires_grad) continue;
    backward_node(id);
  }
}

void Tape::backward_node(ValueId id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const Matrix& g = n.grad;
  const auto wants = [&](ValueId p) { return p >= 0 && node(p).requires_grad; };

  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
      return;

    case Op::kMatMul: {
      const Matrix& av = value(n.a);
      const Matrix& bv = value(n.b);
      if (wants(n.a)) {
        const Matrix bt = transposed(bv);
        matmul_acc(g, bt, ensure_grad(n.a));
      }
      if (wants(n.b)) {
        const Matrix at = transposed(av);
        matmul_acc(at, g, ensure_grad(n.b));
      }
      return;
    }

    case Op::kAdd: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
      }
      if (wants(n.b)) {
        Matrix& db = ensure_grad(n.b);
        if (db.same_shape(g)) {
          for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i];
        } else {
          for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) db(0, j) += g(i, j);
          }
        }
      }
      return;
    }

    case Op::kSub: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
      }
      if (wants(n.b)) {
        Matrix& db = ensure_grad(n.b);
        if (db.same_shape(g)) {
          for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] -= g.v[i];
        } else {
          for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) db(0, j) -= g(i, j);
          }
        }
      }
      return;
    }

    case Op::kMul: {
      const Matrix& av = value(n.a);
      const Matrix& bv = value(n.b);
      const bool row_bcast = !av.same_shape(bv);
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        if (!row_bcast) {
          for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * bv.v[i];
        } else {
          for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) da(i, j) += g(i, j) * bv(0, j);
          }
        }
      }
      if (wants(n.b)) {
        Matrix& db = ensure_grad(n.b);
        if (!row_bcast) {
          for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i] * av.v[i];
        } else {
          for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < g.cols; ++j) db(0, j) += g(i, j) * av(i, j);
          }
        }
      }
      return;
    }

    case Op::kScale: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += n.scalar * g.v[i];
      }
      return;
    }

    case Op::kAddScalar: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
      }
      return;
    }

    case Op::kSigmoid: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
          const double y = n.value.v[i];
          da.v[i] += g.v[i] * y * (1.0 - y);
        }
      }
      return;
    }

    case Op::kLeakyRelu: {
      if (wants(n.a)) {
        const Matrix& av = value(n.a);
        Matrix& da = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
          da.v[i] += g.v[i] * (av.v[i] > 0.0 ? 1.0 : n.scalar);
        }
      }
      return;
    }

    case Op::kTranspose: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (int i = 0; i < g.rows; ++i) {
          for (int j = 0; j < g.cols; ++j) da(j, i) += g(i, j);
        }
      }
      return;
    }

    case Op::kSliceRows: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (int i = 0; i < g.rows; ++i) {
          for (int j = 0; j < g.cols; ++j) da(n.row_begin + i, j) += g(i, j);
        }
      }
      return;
    }

    case Op::kMaskedRowSoftmax: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        for (int i = 0; i < g.rows; ++i) {
          const std::size_t base = static_cast<std::size_t>(i) * g.cols;
          double dot = 0.0;
          for (int j = 0; j < g.cols; ++j) {
            if (n.mask[base + j]) dot += g.v[base + j] * n.value.v[base + j];
          }
          for (int j = 0; j < g.cols; ++j) {
            if (n.mask[base + j]) da.v[base + j] += n.value.v[base + j] * (g.v[base + j] - dot);
          }
        }
      }
      return;
    }

    case Op::kRowDistance: {
      const Matrix& av = value(n.a);
      const Matrix& bv = value(n.b);
      const bool da_live = wants(n.a);
      const bool db_live = wants(n.b);
      Matrix* da = da_live ? &ensure_grad(n.a) : nullptr;
      Matrix* db = db_live ? &ensure_grad(n.b) : nullptr;
      for (int i = 0; i < av.rows; ++i) {
        const double d = n.value(i, 0);
        if (d == 0.0) continue;  // subgradient 0 at the kink
        const double coef = g(i, 0) / (av.cols * d);
        for (int j = 0; j < av.cols; ++j) {
          const double e = coef * (av(i, j) - bv(i, j));
          if (da_live) (*da)(i, j) += e;
          if (db_live) (*db)(i, j) -= e;
        }
      }
      return;
    }

    case Op::kAttentionAggregate: {
      const Matrix& hv = value(n.a);
      const Matrix& pv = value(n.b);
      const Matrix& qv = value(n.c);
      const NeighborLists& nb = *n.nbrs;
      const bool dh_live = wants(n.a);
      const bool dp_live = wants(n.b);
      const bool dq_live = wants(n.c);
      Matrix* dh = dh_live ? &ensure_grad(n.a) : nullptr;
      Matrix* dp = dp_live ? &ensure_grad(n.b) : nullptr;
      Matrix* dq = dq_live ? &ensure_grad(n.c) : nullptr;

      std::vector<double> gamma, gdot;
      for (int i = 0; i < hv.rows; ++i) {
        const int lo = nb.offsets[i], hix = nb.offsets[i + 1];
        const int deg = hix - lo;
        gamma.resize(static_cast<std::size_t>(deg));
        gdot.resize(static_cast<std::size_t>(deg));

        // Recompute the row softmax (same arithmetic as forward).
        double top = -std::numeric_limits<double>::infinity();
        for (int e = lo; e < hix; ++e) {
          const double s = dcor::leaky_relu(pv(i, 0) + qv(nb.targets[static_cast<std::size_t>(e)], 0), n.scalar);
          gamma[static_cast<std::size_t>(e - lo)] = s;
          top = std::max(top, s);
        }
        double total = 0.0;
        for (double& x : gamma) {
          x = std::exp(x - top);
          total += x;
        }
        const double inv = 1.0 / total;
        for (double& x : gamma) x *= inv;

        const double* grow = g.v.data() + static_cast<std::size_t>(i) * hv.cols;
        double mix = 0.0;
        for (int e = lo; e < hix; ++e) {
          const int k = nb.targets[static_cast<std::size_t>(e)];
          const double* hrow = hv.v.data() + static_cast<std::size_t>(k) * hv.cols;
          double dot = 0.0;
          for (int j = 0; j < hv.cols; ++j) dot += grow[j] * hrow[j];
          gdot[static_cast<std::size_t>(e - lo)] = dot;
          mix += gamma[static_cast<std::size_t>(e - lo)] * dot;
          if (dh_live) {
            double* dhrow = dh->v.data() + static_cast<std::size_t>(k) * hv.cols;
            const double gm = gamma[static_cast<std::size_t>(e - lo)];
            for (int j = 0; j < hv.cols; ++j) dhrow[j] += gm * grow[j];
          }
        }
        if (dp_live || dq_live) {
          for (int e = lo; e < hix; ++e) {
            const int k = nb.targets[static_cast<std::size_t>(e)];
            const double ds = gamma[static_cast<std::size_t>(e - lo)] * (gdot[static_cast<std::size_t>(e - lo)] - mix);
            const double pre = pv(i, 0) + qv(k, 0);
            const double dz = ds * (pre > 0.0 ? 1.0 : n.scalar);
            if (dp_live) (*dp)(i, 0) += dz;
            if (dq_live) (*dq)(k, 0) += dz;
          }
        }
      }
      return;
    }

    case Op::kSum: {
      if (wants(n.a)) {
        Matrix& da = ensure_grad(n.a);
        const double gs = g(0, 0);
        for (double& x : da.v) x += gs;
      }
      return;
    }
  }
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state, double lr) {
  if (!params.same_shape(grads)) {
    throw DimensionError("adam_step: params " + shape_str(params) + " vs grads " + shape_str(grads));
  }
  if (!state.first_moment.same_shape(params) || !state.second_moment.same_shape(params)) {
    throw DimensionError("adam_step: state moments do not match param shape " + shape_str(params));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.v.size(); ++i) {
    const double gv = grads.v[i];
    double& m = state.first_moment.v[i];
    double& s = state.second_moment.v[i];
    m = state.beta1 * m + (1.0 - state.beta1) * gv;
    s = state.beta2 * s + (1.0 - state.beta2) * gv * gv;
    params.v[i] -= lr * (m / bc1) / (std::sqrt(s / bc2) + state.epsilon);
  }
}

}  // namespace dcor

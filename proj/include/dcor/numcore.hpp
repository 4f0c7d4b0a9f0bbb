#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dcor/errors.hpp"
#include "dcor/matrix.hpp"

namespace dcor {

// Logistic function. The input is saturated at |x| = 36 so results stay
// strictly inside (0, 1) in double precision.
double sigmoid(double x);

// x for x > 0, slope * x otherwise.
double leaky_relu(double x, double slope);

// Compressed sorted neighbor lists; drives the per-edge attention aggregation.
struct NeighborLists {
  std::vector<int> offsets;  // size rows + 1
  std::vector<int> targets;  // ascending within each row

  int rows() const { return static_cast<int>(offsets.size()) - 1; }
  int degree(int i) const { return offsets[i + 1] - offsets[i]; }
};

using ValueId = int;

// Reverse-mode differentiation tape over dense matrices. Values are computed
// eagerly as operations are recorded; backward() fills gradient slots for
// every node reachable from the loss. Nodes are topologically ordered by
// construction (parents always precede children).
class Tape {
 public:
  // Constant leaf: participates in forward values, receives no gradient.
  ValueId input(Matrix value);
  // Tracked leaf: backward() produces its gradient.
  ValueId param(Matrix value);

  ValueId matmul(ValueId a, ValueId b);
  // Binary elementwise ops accept equal shapes or a 1xC row-broadcast second operand.
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId scale(ValueId a, double c);
  ValueId add_scalar(ValueId a, double c);
  ValueId sigmoid(ValueId a);
  ValueId leaky_relu(ValueId a, double slope);
  ValueId transpose(ValueId a);
  ValueId slice_rows(ValueId a, int row_begin, int row_end);
  // Per row: exp over unmasked entries normalized to sum 1; masked entries
  // are exactly 0. Every row must have at least one unmasked entry.
  ValueId masked_row_softmax(ValueId scores, std::vector<std::uint8_t> mask);
  // n x 1 of ||a_i - b_i||_2 / sqrt(cols), the dimension-normalized row distance.
  ValueId row_distance(ValueId a, ValueId b);
  // Graph-attention aggregation, per-edge only (no dense score matrix):
  // out_i = sum_{k in N_i} gamma_ik * hidden_k where gamma is the row softmax
  // of leaky_relu(row_score_i + col_score_k) over k in N_i.
  ValueId attention_aggregate(ValueId hidden, ValueId row_score, ValueId col_score,
                              std::shared_ptr<const NeighborLists> nbrs, double slope);
  // 1x1 total of all entries.
  ValueId sum(ValueId a);

  const Matrix& value(ValueId id) const;
  // Gradients of `loss` (must be 1x1) w.r.t. every tracked leaf, by reverse
  // topological accumulation. May be called repeatedly; each call resets
  // previous gradients.
  void backward(ValueId loss);
  bool has_grad(ValueId id) const;
  const Matrix& grad(ValueId id) const;
  const std::vector<ValueId>& params() const { return params_; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kInput,
    kParam,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddScalar,
    kSigmoid,
    kLeakyRelu,
    kTranspose,
    kSliceRows,
    kMaskedRowSoftmax,
    kRowDistance,
    kAttentionAggregate,
    kSum,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    int c = -1;  // attention: col_score parent
    double scalar = 0.0;
    int row_begin = 0;
    int row_end = 0;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::vector<std::uint8_t> mask;
    std::shared_ptr<const NeighborLists> nbrs;
  };

  ValueId push(Node n);
  const Node& node(ValueId id) const;
  Matrix& ensure_grad(ValueId id);
  void backward_node(ValueId id);

  std::vector<Node> nodes_;
  std::vector<ValueId> params_;
};

// Adam optimizer state for one parameter matrix.
struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState like(const Matrix& p) {
    AdamState s;
    s.first_moment = Matrix::zeros(p.rows, p.cols);
    s.second_moment = Matrix::zeros(p.rows, p.cols);
    return s;
  }
};

// In-place Adam update with bias correction. Deterministic.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state, double lr);

}  // namespace dcor

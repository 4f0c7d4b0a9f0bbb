#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dcor/graphdata.hpp"
#include "dcor/numcore.hpp"

namespace dcor {

// Leaky-ReLU slope shared by the encoder activations and attention scoring.
inline constexpr double kLeakySlope = 0.2;

// Trainable weights of the dual autoencoder. The attribute encoder weight
// w_a1 is tied to the node count, which makes the model transductive.
struct DcorParams {
  int n = 0;
  int d = 0;
  int h = 0;
  Matrix w_v1;  // d x h
  Matrix b_v1;  // 1 x h
  Matrix w_v2;  // h x h
  Matrix attn;  // 2h x 1
  Matrix w_a1;  // n x h
  Matrix b_a1;  // 1 x h
  Matrix w_a2;  // h x h
  Matrix b_a2;  // 1 x h

  // Glorot-style uniform init, bounds +-sqrt(6 / (fan_in + fan_out)), seeded.
  static DcorParams init(int n, int d, int h, std::uint64_t seed);

  // Name -> matrix in fixed order (init, optimizer and checkpoint order).
  std::vector<std::pair<std::string, Matrix*>> entries();
  std::vector<std::pair<std::string, const Matrix*>> entries() const;

  void check_shapes(const AttributedGraph& g) const;
};

// Versioned text container, round-trip exact (17 significant digits).
void save_checkpoint(const DcorParams& params, const std::string& path);
DcorParams load_checkpoint(const std::string& path);

struct Reconstruction {
  Matrix a_hat;  // n x n, symmetric, entries in (0, 1)
  Matrix x_hat;  // n x d
  Matrix z_v;    // n x h
  Matrix z_a;    // d x h
};

// Tape handles for the parameter leaves of one training step.
struct ParamNodes {
  ValueId w_v1, b_v1, w_v2, attn, w_a1, b_a1, w_a2, b_a2;
};

struct ForwardNodes {
  ValueId z_v, a_hat, z_a, x_hat;
};

ParamNodes register_params(Tape& t, const DcorParams& params);

// Structure encoder: hidden = leaky(X W_v1 + b_v1); per-edge attention
// scores leaky(a^T [W_v2 h_i || W_v2 h_j]) softmax-normalized over N_i;
// Z_v rows are the attention-weighted neighbor aggregates. N_i includes i
// itself so isolated nodes stay well-defined.
ValueId structure_encode_on(Tape& t, const AttributedGraph& g, const ParamNodes& p,
                            bool include_self = true);
// A_hat = sigmoid(Z_v Z_v^T).
ValueId structure_decode_on(Tape& t, ValueId z_v);
// Z_a = leaky(X^T W_a1 + b_a1) W_a2 + b_a2, shape d x h.
ValueId attribute_encode_on(Tape& t, const AttributedGraph& g, const ParamNodes& p);
// X_hat = Z_v Z_a^T.
ValueId attribute_decode_on(Tape& t, ValueId z_v, ValueId z_a);
ForwardNodes forward_on(Tape& t, const AttributedGraph& g, const ParamNodes& p);

// Tape-free wrappers over the same implementation.
Matrix structure_encode(const AttributedGraph& g, const DcorParams& params);
Matrix structure_decode(const Matrix& z_v);
Matrix attribute_encode(const AttributedGraph& g, const DcorParams& params);
Matrix attribute_decode(const Matrix& z_v, const Matrix& z_a);
Reconstruction forward(const AttributedGraph& g, const DcorParams& params);

// Every Reconstruction invariant violation (shapes, symmetry, (0,1) range).
std::vector<std::string> check_reconstruction(const Reconstruction& rec, int n, int d, int h);

}  // namespace dcor

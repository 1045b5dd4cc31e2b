#pragma once

#include <cstdint>
#include <vector>

#include "gecco/tensor.hpp"

namespace gecco {

enum class AdjacencyMode { AllOnes, RowNormalized };

enum class Mode { Train, Eval };

// Architecture hyperparameters. The graph path runs only when
// use_gcn && gcn_layers >= 1 && batch size >= 2; otherwise the forward pass
// takes the bypass route (FC -> pooled features -> classifier).
struct ModelConfig {
  int image_h = 28;
  int image_w = 28;
  int d_out = 86;
  int num_classes = 10;
  int batch_size = 64;
  real dropout_rate = real(0.5);
  int gcn_layers = 1;
  bool use_gcn = true;
  bool use_attention = true;
  // Adds the node's own features to the graph-conv pre-activation:
  //   H_l = sigmoid(A H_{l-1} W2_l + H_{l-1})
  // Without it the all-ones adjacency makes every row of A*H identical, so
  // the graph output carries no per-image signal and W2 gets no gradient
  // through train-mode batch norm. Off reproduces the bare formula.
  bool gcn_self_term = false;
  AdjacencyMode adjacency_mode = AdjacencyMode::AllOnes;

  int input_dim() const { return image_h * image_w; }
  int pooled_dim() const { return d_out / 2; }

  // Throws ConfigError on invalid combinations.
  void validate() const;
};

struct BatchNormState {
  Tensor2D gamma;         // 1xD
  Tensor2D beta;          // 1xD
  Tensor2D running_mean;  // 1xD
  Tensor2D running_var;   // 1xD, entries > 0
};

// Parameter container. w2 and bn are only populated when the config keeps
// the graph path; trainable scalars then are w1, b1, every w2, bn.gamma,
// bn.beta, w_cls, b_cls.
struct GeccoModel {
  Tensor2D w1;               // (H*W) x D
  Tensor2D b1;               // 1 x D
  std::vector<Tensor2D> w2;  // gcn_layers tensors, D x D
  BatchNormState bn;
  Tensor2D w_cls;            // (D/2) x C
  Tensor2D b_cls;            // 1 x C
  Mode mode = Mode::Eval;

  bool has_graph_path() const { return !w2.empty(); }
  std::size_t parameter_count() const;
};

// Seeded uniform init in +/- sqrt(6/(fan_in+fan_out)); biases zero,
// batch-norm at identity (gamma 1, beta 0, running stats 0/1).
GeccoModel init_model(const ModelConfig& config, std::uint64_t seed);

// Every intermediate of the forward pass, cached for backprop and
// inspection. Graph/attention fields stay empty on the bypass route.
struct ForwardTrace {
  Tensor2D x1;            // B x (H*W) input
  Tensor2D x2;            // relu(x1 w1 + b1)
  Tensor2D dropout_mask;  // entries 0 or 1/(1-p); all-ones in eval
  Tensor2D x2d;           // x2 * mask
  Tensor2D x3;            // relu(x2d)
  bool bypass = false;

  std::vector<Tensor2D> gcn_pre;  // P_l = A * H_{l-1}
  std::vector<Tensor2D> gcn_out;  // H_l = sigmoid(P_l W2_l [+ H_{l-1}])
  Tensor2D bn_xhat;
  Tensor2D bn_inv_std;            // 1xD
  Tensor2D bn_out;
  Tensor2D x4;                    // pooled features, B x (D/2)
  std::vector<int> pool_argmax;

  Tensor2D attention_scores;      // S = sigmoid(x4 x4^T)
  Tensor2D attention_colsum;      // 1xB
  Tensor2D attention;             // M, columns sum to 1
  Tensor2D x5;                    // M x4
  Tensor2D x6;                    // x5 + x4 (or x4 / pooled x3 when skipped)

  Tensor2D logits;
  Tensor2D probabilities;
  Mode mode = Mode::Eval;
};

// Flattens a batch of HxW images into rows, row-major scan order.
// Throws ShapeError on a ragged batch.
Tensor2D vectorize(const std::vector<Tensor2D>& images);

// Full forward pass. Train mode needs dropout_seed; running batch-norm
// stats update only when update_running_stats (finite-difference checks
// freeze them).
ForwardTrace forward(GeccoModel& model, const ModelConfig& config, const Tensor2D& x,
                     std::uint64_t dropout_seed = 0, bool update_running_stats = true);

// Column-normalized sigmoid similarity: M = sigmoid(x4 x4^T) with every
// column scaled to sum 1. Exposed for direct testing.
Tensor2D attention_mixing_matrix(const Tensor2D& x4);

struct BatchNormResult {
  Tensor2D out;
  Tensor2D xhat;
  Tensor2D inv_std;  // 1xD
};

// Per-feature batch normalization, eps 1e-5, running-stat momentum 0.1.
// Train mode requires >= 2 rows.
BatchNormResult batchnorm(const Tensor2D& x, BatchNormState& state, Mode mode,
                          bool update_running_stats = true);

}  // namespace gecco

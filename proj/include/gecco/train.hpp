#pragma once

#include <cstdint>
#include <vector>

#include "gecco/data.hpp"
#include "gecco/model.hpp"

namespace gecco {

// One tensor per trainable parameter, shape-matched with GeccoModel.
// Fields for an absent graph path stay empty.
struct Gradients {
  Tensor2D w1, b1;
  std::vector<Tensor2D> w2;
  Tensor2D bn_gamma, bn_beta;
  Tensor2D w_cls, b_cls;
};

// Mean over the batch of -log p[label], probabilities clamped to >= 1e-12.
real cross_entropy(const Tensor2D& probabilities, const std::vector<int>& labels);

// Analytic gradients of cross_entropy(forward(...)) for every parameter.
// `trace` must come from a train-mode forward on `model`.
Gradients backward(const GeccoModel& model, const ModelConfig& config, const ForwardTrace& trace,
                   const std::vector<int>& labels);

struct AdamState {
  real lr = real(1e-3);
  real beta1 = real(0.9);
  real beta2 = real(0.999);
  real eps = real(1e-8);
  long step = 0;
  // First/second moments in the same order backward emits gradients.
  Gradients m;
  Gradients v;
};

AdamState make_adam_state(const GeccoModel& model, real lr = real(1e-3));

// Standard bias-corrected Adam update, in place.
void adam_step(AdamState& state, GeccoModel& model, const Gradients& grads);

struct EpochStats {
  real loss = real(0);
  real train_accuracy = real(0);
  real eval_accuracy = real(0);
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

struct TrainOptions {
  int epochs = 15;
  real lr = real(1e-3);
  std::uint64_t seed = 0;
};

// Seeded, deterministic training loop. The final partial batch is dropped
// while training (the batch graph and batch norm depend on batch size) and
// kept during evaluation. Training accuracy is accumulated from the
// train-mode forward passes of the epoch.
TrainReport train_loop(GeccoModel& model, const ModelConfig& config, const Dataset& train_data,
                       const Dataset& eval_data, const TrainOptions& options);

// Top-1 accuracy over the full dataset in eval mode, ragged final batch kept.
real evaluate_accuracy(GeccoModel& model, const ModelConfig& config, const Dataset& data);

// Per-class accuracy; entries are correct/total per class index.
std::vector<real> evaluate_per_class_accuracy(GeccoModel& model, const ModelConfig& config,
                                              const Dataset& data);

}  // namespace gecco

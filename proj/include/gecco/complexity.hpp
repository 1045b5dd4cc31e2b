#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gecco/model.hpp"

namespace gecco {

// One pipeline stage in the complexity breakdown.
struct LayerCost {
  std::string name;
  std::uint64_t macs_per_image = 0;   // multiply-accumulates, a += b*c
  std::uint64_t params = 0;           // trainable scalars owned by the stage
  std::uint64_t non_mac_per_batch = 0;  // adds/compares/exp/div/sqrt, whole batch
};

struct ComplexityReport {
  std::uint64_t macs_per_image = 0;
  std::uint64_t parameters = 0;
  double model_size_megabits = 0.0;  // parameters * 32 / 1e6 at 32-bit storage
  int layers = 0;
  int batch_size = 0;
  std::vector<LayerCost> breakdown;

  std::string to_text() const;
  std::string to_csv() const;
};

// Closed-form trainable-parameter count; equals the enumeration over an
// instantiated model's tensors.
std::uint64_t count_parameters(const ModelConfig& config);

// Analytic per-image MAC count of one eval-mode batch forward at the given
// batch size. Counting rules (mirrored by the instrumented test oracle):
//   - a matmul (m x k)(k x n) is m*k*n MACs;
//   - every elementwise multiply is one MAC (batch-norm's two multiplies,
//     attention's reciprocal-scaling multiplies);
//   - additions, comparisons, exp, sqrt and divisions are non-MAC ops,
//     tallied separately per batch.
std::uint64_t count_macs(const ModelConfig& config, int batch_size);

// Pipeline stages under the published taxonomy: flatten, FC, ReLU, dropout,
// ReLU, {adjacency matmul, weight matmul, sigmoid} per graph layer, batch
// norm, max pool, {similarity, normalize, mix} for attention, residual add,
// classifier FC, softmax.
int count_layers(const ModelConfig& config);

ComplexityReport complexity_report(const ModelConfig& config, int batch_size);

}  // namespace gecco

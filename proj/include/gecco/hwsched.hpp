#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gecco/model.hpp"

namespace gecco {

// The accelerator's shared compute primitives. Closed set; column/row
// summations fold into the elementwise unit.
enum class KernelUnit {
  Matmul,
  Activation,
  Elementwise,
  MatrixAddition,
  MaxPooling,
  BatchNormalization,
};

const char* kernel_unit_name(KernelUnit u);

struct ScheduleRecord {
  int layer_index = 0;
  std::string layer_kind;
  KernelUnit unit = KernelUnit::Matmul;
  std::vector<std::array<int, 2>> operand_shapes;
  std::array<int, 2> output_shape{0, 0};
};

struct KernelSchedule {
  std::vector<ScheduleRecord> records;

  std::string to_text() const;
  std::string to_csv() const;
};

// Dispatches the model's layers to kernel units, layer by layer:
// fully connected -> matmul; graph convolution -> matmul, activation,
// elementwise, matrix addition; batch-wise attention -> matmul, activation,
// elementwise; max pooling, activation and batch norm map to their own
// units. The ingest flatten is recorded on the elementwise unit.
KernelSchedule emit_schedule(const ModelConfig& config);

struct MemoryEstimate {
  std::uint64_t parameter_bytes = 0;
  std::uint64_t input_bytes = 0;
  std::uint64_t peak_intermediate_bytes = 0;  // liveness walk over the schedule
  std::uint64_t total_bytes = 0;
  std::uint64_t budget_bytes = 0;
  bool feasible = false;

  std::string to_text() const;
};

// Single-load feasibility: weights plus the input batch stay resident, and
// intermediates occupy memory from production to last use. Default budget
// is 35 MB of on-chip memory.
MemoryEstimate estimate_single_load_memory(const ModelConfig& config,
                                           std::uint64_t budget_bytes = 35000000ULL,
                                           int bytes_per_scalar = 4);

}  // namespace gecco

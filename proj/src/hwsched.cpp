#include "gecco/hwsched.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace gecco {

const char* kernel_unit_name(KernelUnit u) {
  switch (u) {
    case KernelUnit::Matmul: return "matmul";
    case KernelUnit::Activation: return "activation";
    case KernelUnit::Elementwise: return "elementwise";
    case KernelUnit::MatrixAddition: return "matrix_addition";
    case KernelUnit::MaxPooling: return "max_pooling";
    case KernelUnit::BatchNormalization: return "batch_normalization";
  }
  throw ConfigError("kernel_unit_name: unknown unit");
}

KernelSchedule emit_schedule(const ModelConfig& config) {
  config.validate();
  const int b = config.batch_size;
  const int hw = config.input_dim();
  const int d = config.d_out;
  const int k = config.pooled_dim();
  const int c = config.num_classes;
  const bool graph = config.use_gcn && config.gcn_layers >= 1 && b >= 2;

  KernelSchedule sched;
  int layer = 0;
  auto rec = [&](const std::string& kind, KernelUnit unit,
                 std::vector<std::array<int, 2>> operands, std::array<int, 2> out) {
    sched.records.push_back({layer, kind, unit, std::move(operands), out});
  };

  rec("flatten", KernelUnit::Elementwise, {{b, hw}}, {b, hw});
  ++layer;
  rec("fully_connected", KernelUnit::Matmul, {{b, hw}, {hw, d}}, {b, d});
  ++layer;
  rec("activation", KernelUnit::Activation, {{b, d}}, {b, d});
  ++layer;

  if (graph) {
    for (int l = 0; l < config.gcn_layers; ++l) {
      rec("graph_convolution", KernelUnit::Matmul, {{b, b}, {b, d}, {d, d}}, {b, d});
      rec("graph_convolution", KernelUnit::Activation, {{b, d}}, {b, d});
      rec("graph_convolution", KernelUnit::Elementwise, {{b, d}}, {b, d});
      rec("graph_convolution", KernelUnit::MatrixAddition, {{b, d}, {b, d}}, {b, d});
      ++layer;
    }
    rec("batch_normalization", KernelUnit::BatchNormalization, {{b, d}}, {b, d});
    ++layer;
    rec("max_pooling", KernelUnit::MaxPooling, {{b, d}}, {b, k});
    ++layer;
    if (config.use_attention) {
      rec("batch_attention", KernelUnit::Matmul, {{b, k}, {k, b}}, {b, b});
      rec("batch_attention", KernelUnit::Activation, {{b, b}}, {b, b});
      rec("batch_attention", KernelUnit::Elementwise, {{b, b}, {b, k}}, {b, k});
      ++layer;
    }
  } else {
    rec("max_pooling", KernelUnit::MaxPooling, {{b, d}}, {b, k});
    ++layer;
  }

  rec("fully_connected", KernelUnit::Matmul, {{b, k}, {k, c}}, {b, c});
  ++layer;
  rec("activation", KernelUnit::Activation, {{b, c}}, {b, c});
  return sched;
}

std::string KernelSchedule::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(7) << "layer" << std::setw(22) << "kind" << std::setw(21)
     << "unit" << std::setw(28) << "operands" << "output\n";
  for (const ScheduleRecord& r : records) {
    std::ostringstream ops;
    for (std::size_t i = 0; i < r.operand_shapes.size(); ++i) {
      if (i) ops << ";";
      ops << r.operand_shapes[i][0] << "x" << r.operand_shapes[i][1];
    }
    os << std::left << std::setw(7) << r.layer_index << std::setw(22) << r.layer_kind
       << std::setw(21) << kernel_unit_name(r.unit) << std::setw(28) << ops.str()
       << r.output_shape[0] << "x" << r.output_shape[1] << "\n";
  }
  return os.str();
}

std::string KernelSchedule::to_csv() const {
  std::ostringstream os;
  os << "layer_index,layer_kind,unit,operands,output\n";
  for (const ScheduleRecord& r : records) {
    std::ostringstream ops;
    for (std::size_t i = 0; i < r.operand_shapes.size(); ++i) {
      if (i) ops << ";";
      ops << r.operand_shapes[i][0] << "x" << r.operand_shapes[i][1];
    }
    os << r.layer_index << "," << r.layer_kind << "," << kernel_unit_name(r.unit) << ","
       << ops.str() << "," << r.output_shape[0] << "x" << r.output_shape[1] << "\n";
  }
  return os.str();
}

namespace {

struct LiveTensor {
  std::uint64_t bytes;
  std::size_t produced;
  std::size_t last_use;
};

// Record index of the n-th record matching a predicate; schedules are small
// so linear scans are fine.
template <typename Pred>
std::size_t find_record(const KernelSchedule& s, Pred pred, std::size_t occurrence = 0) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    if (pred(s.records[i])) {
      if (seen == occurrence) return i;
      ++seen;
    }
  }
  throw ConfigError("memory estimate: schedule record not found");
}

}  // namespace

MemoryEstimate estimate_single_load_memory(const ModelConfig& config, std::uint64_t budget_bytes,
                                           int bytes_per_scalar) {
  config.validate();
  if (budget_bytes == 0) throw ConfigError("memory estimate: budget must be positive");
  const std::uint64_t bpp = static_cast<std::uint64_t>(bytes_per_scalar);
  const std::uint64_t b = static_cast<std::uint64_t>(config.batch_size);
  const std::uint64_t hw = static_cast<std::uint64_t>(config.input_dim());
  const std::uint64_t d = static_cast<std::uint64_t>(config.d_out);
  const std::uint64_t k = static_cast<std::uint64_t>(config.pooled_dim());
  const std::uint64_t c = static_cast<std::uint64_t>(config.num_classes);
  const bool graph = config.use_gcn && config.gcn_layers >= 1 && config.batch_size >= 2;

  MemoryEstimate est;
  est.budget_bytes = budget_bytes;

  // Weights stay resident for the whole run; batch norm keeps gamma/beta
  // plus the running statistics on chip.
  std::uint64_t param_scalars = hw * d + d + k * c + c;
  if (graph) {
    param_scalars += static_cast<std::uint64_t>(config.gcn_layers) * d * d + 4 * d;
  }
  est.parameter_bytes = param_scalars * bpp;
  est.input_bytes = b * hw * bpp;

  const KernelSchedule sched = emit_schedule(config);
  const std::size_t end = sched.records.size() - 1;
  auto is = [](const std::string& kind, KernelUnit unit) {
    return [kind, unit](const ScheduleRecord& r) { return r.layer_kind == kind && r.unit == unit; };
  };

  std::vector<LiveTensor> tensors;
  const std::size_t fc1 = find_record(sched, is("fully_connected", KernelUnit::Matmul));
  const std::size_t cls = find_record(sched, is("fully_connected", KernelUnit::Matmul), 1);
  if (graph) {
    const std::size_t bn = find_record(sched, is("batch_normalization", KernelUnit::BatchNormalization));
    const std::size_t pool = find_record(sched, is("max_pooling", KernelUnit::MaxPooling));
    // FC output (x3) feeds the first graph layer up to its addition record.
    std::size_t h_prev_death =
        find_record(sched, is("graph_convolution", KernelUnit::MatrixAddition), 0);
    tensors.push_back({b * d * bpp, fc1, h_prev_death});
    for (int l = 0; l < config.gcn_layers; ++l) {
      const std::size_t mm =
          find_record(sched, is("graph_convolution", KernelUnit::Matmul), static_cast<std::size_t>(l));
      // aggregated operand A*H, consumed by this layer's own records
      const std::size_t death = find_record(sched, is("graph_convolution", KernelUnit::MatrixAddition),
                                            static_cast<std::size_t>(l));
      tensors.push_back({b * d * bpp, mm, death});
      const std::size_t next_death =
          l + 1 < config.gcn_layers
              ? find_record(sched, is("graph_convolution", KernelUnit::MatrixAddition),
                            static_cast<std::size_t>(l + 1))
              : bn;
      tensors.push_back({b * d * bpp, death, next_death});  // H_l
    }
    tensors.push_back({b * d * bpp, bn, pool});  // bn output
    if (config.use_attention) {
      const std::size_t att_mm = find_record(sched, is("batch_attention", KernelUnit::Matmul));
      const std::size_t att_ew = find_record(sched, is("batch_attention", KernelUnit::Elementwise));
      tensors.push_back({b * k * bpp, pool, att_ew});    // x4
      tensors.push_back({b * b * bpp, att_mm, att_ew});  // similarity / mixing matrix
      tensors.push_back({b * k * bpp, att_ew, cls});     // x6
    } else {
      tensors.push_back({b * k * bpp, pool, cls});
    }
  } else {
    const std::size_t pool = find_record(sched, is("max_pooling", KernelUnit::MaxPooling));
    tensors.push_back({b * d * bpp, fc1, pool});  // x3
    tensors.push_back({b * k * bpp, pool, cls});  // pooled features
  }
  tensors.push_back({b * c * bpp, cls, end});  // logits / probabilities

  std::uint64_t peak = 0;
  for (std::size_t step = 0; step < sched.records.size(); ++step) {
    std::uint64_t live = 0;
    for (const LiveTensor& t : tensors) {
      if (t.produced <= step && step <= t.last_use) live += t.bytes;
    }
    peak = std::max(peak, live);
  }
  est.peak_intermediate_bytes = peak;
  est.total_bytes = est.parameter_bytes + est.input_bytes + est.peak_intermediate_bytes;
  est.feasible = est.total_bytes <= est.budget_bytes;
  return est;
}

std::string MemoryEstimate::to_text() const {
  std::ostringstream os;
  os << "parameter bytes:          " << parameter_bytes << "\n"
     << "input batch bytes:        " << input_bytes << "\n"
     << "peak intermediate bytes:  " << peak_intermediate_bytes << "\n"
     << "total resident bytes:     " << total_bytes << "\n"
     << "budget bytes:             " << budget_bytes << "\n"
     << "single-load feasible:     " << (feasible ? "yes" : "no") << "\n";
  return os.str();
}

}  // namespace gecco

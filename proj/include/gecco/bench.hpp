#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gecco/model.hpp"

namespace gecco {

// Latency is wall-clock time for one batched inference (vectorize + full
// forward, batch already resident in memory); throughput is batch_size /
// latency, so throughput_i * latency_i == batch_size holds per run by
// construction.
struct BenchReport {
  int batch_size = 0;
  int runs = 0;
  double latency_ms_mean = 0.0;
  double latency_ms_std = 0.0;  // sample std, n-1 denominator
  double throughput_mean = 0.0;  // imgs/ms
  double throughput_std = 0.0;
  std::vector<double> latency_ms_samples;

  std::string to_text() const;
};

// Monotonic seconds; injectable for deterministic tests.
using ClockFn = std::function<double()>;
double steady_seconds();

// Times `timed_runs` forwards after `warmup_runs` discarded ones. The model
// must be in eval mode. warmup_runs >= 1, timed_runs >= 2.
BenchReport bench_inference(GeccoModel& model, const ModelConfig& config,
                            const std::vector<Tensor2D>& images, int warmup_runs, int timed_runs,
                            const ClockFn& clock = steady_seconds);

std::string bench_csv_header();
std::string bench_csv_row(const BenchReport& report);

// One report per batch size, deterministic order. The per-size batch is
// sliced from `images` (which must hold at least max(batch_sizes) images).
std::vector<BenchReport> bench_sweep(GeccoModel& model, const ModelConfig& config,
                                     const std::vector<Tensor2D>& images,
                                     const std::vector<int>& batch_sizes, int warmup_runs,
                                     int timed_runs, const ClockFn& clock = steady_seconds);

}  // namespace gecco

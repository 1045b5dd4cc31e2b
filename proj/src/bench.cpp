#include "gecco/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace gecco {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

BenchReport bench_inference(GeccoModel& model, const ModelConfig& config,
                            const std::vector<Tensor2D>& images, int warmup_runs, int timed_runs,
                            const ClockFn& clock) {
  if (model.mode != Mode::Eval) {
    throw ConfigError("bench_inference: model must be in eval mode (dropout would distort timing)");
  }
  if (warmup_runs < 1) throw ConfigError("bench_inference: warmup_runs must be >= 1");
  if (timed_runs < 2) throw ConfigError("bench_inference: timed_runs must be >= 2 to report a std");
  if (images.empty()) throw DataError("bench_inference: empty batch");

  ModelConfig cfg = config;
  cfg.batch_size = static_cast<int>(images.size());

  for (int i = 0; i < warmup_runs; ++i) {
    const Tensor2D x = vectorize(images);
    (void)forward(model, cfg, x);
  }

  BenchReport rep;
  rep.batch_size = static_cast<int>(images.size());
  rep.runs = timed_runs;
  rep.latency_ms_samples.reserve(static_cast<std::size_t>(timed_runs));
  for (int i = 0; i < timed_runs; ++i) {
    const double t0 = clock();
    const Tensor2D x = vectorize(images);
    (void)forward(model, cfg, x);
    const double t1 = clock();
    rep.latency_ms_samples.push_back((t1 - t0) * 1e3);
  }

  double sum = 0.0;
  for (double v : rep.latency_ms_samples) sum += v;
  rep.latency_ms_mean = sum / timed_runs;
  double sq = 0.0;
  for (double v : rep.latency_ms_samples) sq += (v - rep.latency_ms_mean) * (v - rep.latency_ms_mean);
  rep.latency_ms_std = std::sqrt(sq / (timed_runs - 1));

  // Throughput per run is batch/latency by definition; its mean/std come
  // from the per-run values, not from the latency mean.
  double tsum = 0.0;
  for (double v : rep.latency_ms_samples) tsum += rep.batch_size / v;
  rep.throughput_mean = tsum / timed_runs;
  double tsq = 0.0;
  for (double v : rep.latency_ms_samples) {
    const double t = rep.batch_size / v;
    tsq += (t - rep.throughput_mean) * (t - rep.throughput_mean);
  }
  rep.throughput_std = std::sqrt(tsq / (timed_runs - 1));
  return rep;
}

std::string bench_csv_header() {
  return "batch,runs,latency_ms_mean,latency_ms_std,throughput_mean,throughput_std";
}

std::string bench_csv_row(const BenchReport& r) {
  std::ostringstream os;
  os << r.batch_size << "," << r.runs << "," << std::setprecision(9) << r.latency_ms_mean << ","
     << r.latency_ms_std << "," << r.throughput_mean << "," << r.throughput_std;
  return os.str();
}

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os << "batch " << batch_size << ", " << runs << " runs: latency " << std::fixed
     << std::setprecision(4) << latency_ms_mean << " +/- " << latency_ms_std
     << " ms, throughput " << std::setprecision(3) << throughput_mean << " +/- " << throughput_std
     << " imgs/ms";
  return os.str();
}

std::vector<BenchReport> bench_sweep(GeccoModel& model, const ModelConfig& config,
                                     const std::vector<Tensor2D>& images,
                                     const std::vector<int>& batch_sizes, int warmup_runs,
                                     int timed_runs, const ClockFn& clock) {
  std::vector<BenchReport> out;
  for (int b : batch_sizes) {
    if (b < 1 || static_cast<std::size_t>(b) > images.size()) {
      std::ostringstream os;
      os << "bench_sweep: batch size " << b << " not covered by " << images.size() << " images";
      throw ConfigError(os.str());
    }
    const std::vector<Tensor2D> slice(images.begin(), images.begin() + b);
    out.push_back(bench_inference(model, config, slice, warmup_runs, timed_runs, clock));
  }
  return out;
}

}  // namespace gecco

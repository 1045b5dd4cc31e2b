#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gecco/model.hpp"
#include "gecco/rng.hpp"
#include "gecco/train.hpp"

namespace gecco::testsupport {

// Central finite differences vs the analytic backward pass, per parameter
// tensor. Draws are screened for conditioning: re-running the loss at
// theta +/- h must not cross a relu corner or flip a max-pool winner, and
// train-mode batch norm must not divide by a near-zero batch variance, or
// the numerical derivative stops meaning anything. Rejected seeds are
// skipped deterministically.
struct GradCheckResult {
  std::string tensor;
  double rel_error;  // ||analytic - fd|| / max(norms), 0 for zero-vs-zero
};

struct GradCheckRun {
  std::vector<GradCheckResult> tensors;
  std::uint64_t seed = 0;
  double worst() const {
    double w = 0.0;
    for (const auto& t : tensors) w = std::max(w, t.rel_error);
    return w;
  }
};

#ifdef GECCO_REAL64
constexpr double kFdStep = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr double kZeroFloor = 1e-8;
#else
constexpr double kFdStep = 1e-3;
constexpr double kGradTol = 1e-2;
constexpr double kZeroFloor = 3e-3;
#endif

struct GradCheckProblem {
  GeccoModel model;
  Tensor2D x;
  std::vector<int> labels;
};

inline GradCheckProblem draw_problem(const ModelConfig& cfg, std::uint64_t seed) {
  GradCheckProblem p;
  p.model = init_model(cfg, seed);
  Rng rng(seed * 7919 + 13);
  if (!p.model.bn.gamma.empty()) {
    for (real& v : p.model.bn.gamma.data()) v = uniform_real(rng, real(0.8), real(1.2));
    for (real& v : p.model.bn.beta.data()) v = uniform_real(rng, real(-0.2), real(0.2));
  }
  p.x = Tensor2D(cfg.batch_size, cfg.input_dim());
  for (real& v : p.x.data()) v = uniform_real(rng, real(0), real(1));
  p.labels.resize(static_cast<std::size_t>(cfg.batch_size));
  for (int& y : p.labels) y = static_cast<int>(uniform_index(rng, cfg.num_classes));
  p.model.mode = Mode::Train;
  return p;
}

inline bool well_conditioned(GradCheckProblem& p, const ModelConfig& cfg) {
  const Tensor2D z1 = row_broadcast_add(matmul(p.x, p.model.w1), p.model.b1);
  for (real v : z1.data()) {
    if (std::fabs(static_cast<double>(v)) < 0.05) return false;
  }
  const ForwardTrace tr = forward(p.model, cfg, p.x, 0, false);
  const Tensor2D& pooled_src = tr.bypass ? tr.x3 : tr.bn_out;
  for (int i = 0; i < pooled_src.rows(); ++i) {
    for (int w = 0; w < pooled_src.cols() / 2; ++w) {
      const double gap = std::fabs(static_cast<double>(pooled_src(i, 2 * w)) -
                                   static_cast<double>(pooled_src(i, 2 * w + 1)));
      if (gap < 0.05) return false;
    }
  }
  if (!tr.bypass) {
    const Tensor2D& g = tr.gcn_out.back();
    const int b = g.rows();
    for (int j = 0; j < g.cols(); ++j) {
      double mean = 0.0;
      for (int i = 0; i < b; ++i) mean += g(i, j);
      mean /= b;
      double var = 0.0;
      for (int i = 0; i < b; ++i) var += (g(i, j) - mean) * (g(i, j) - mean);
      var /= b;
      if (var < 5e-3) return false;
    }
  }
  return true;
}

inline double loss_at(GradCheckProblem& p, const ModelConfig& cfg) {
  const ForwardTrace tr = forward(p.model, cfg, p.x, 0, false);
  return static_cast<double>(cross_entropy(tr.probabilities, p.labels));
}

inline GradCheckResult check_tensor(GradCheckProblem& p, const ModelConfig& cfg, Tensor2D& param,
                                    const Tensor2D& analytic, const std::string& name) {
  double norm_a = 0.0, norm_f = 0.0, norm_d = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const real old = param.data()[i];
    param.data()[i] = old + static_cast<real>(kFdStep);
    const double lp = loss_at(p, cfg);
    param.data()[i] = old - static_cast<real>(kFdStep);
    const double lm = loss_at(p, cfg);
    param.data()[i] = old;
    const double fd = (lp - lm) / (2.0 * kFdStep);
    const double a = analytic.empty() ? 0.0 : static_cast<double>(analytic.data()[i]);
    norm_a += a * a;
    norm_f += fd * fd;
    norm_d += (a - fd) * (a - fd);
  }
  norm_a = std::sqrt(norm_a);
  norm_f = std::sqrt(norm_f);
  norm_d = std::sqrt(norm_d);
  const double floor = kZeroFloor * std::sqrt(static_cast<double>(param.size()));
  GradCheckResult res{name, 0.0};
  if (std::max(norm_a, norm_f) >= floor) {
    res.rel_error = norm_d / std::max(norm_a, norm_f);
  }
  return res;
}

// Runs the check on `n_seeds` well-conditioned draws starting from
// `seed_start`; each draw verifies every trainable tensor.
inline std::vector<GradCheckRun> gradient_check(const ModelConfig& cfg, int n_seeds,
                                                std::uint64_t seed_start = 0) {
  std::vector<GradCheckRun> runs;
  std::uint64_t seed = seed_start;
  while (static_cast<int>(runs.size()) < n_seeds) {
    GradCheckProblem p = draw_problem(cfg, seed);
    const std::uint64_t this_seed = seed;
    ++seed;
    if (!well_conditioned(p, cfg)) continue;

    const ForwardTrace tr = forward(p.model, cfg, p.x, 0, false);
    const Gradients g = backward(p.model, cfg, tr, p.labels);

    GradCheckRun run;
    run.seed = this_seed;
    run.tensors.push_back(check_tensor(p, cfg, p.model.w1, g.w1, "w1"));
    run.tensors.push_back(check_tensor(p, cfg, p.model.b1, g.b1, "b1"));
    for (std::size_t l = 0; l < p.model.w2.size(); ++l) {
      const Tensor2D grad = l < g.w2.size() ? g.w2[l] : Tensor2D();
      run.tensors.push_back(
          check_tensor(p, cfg, p.model.w2[l], grad, "w2[" + std::to_string(l) + "]"));
    }
    if (!p.model.bn.gamma.empty()) {
      run.tensors.push_back(check_tensor(p, cfg, p.model.bn.gamma, g.bn_gamma, "bn_gamma"));
      run.tensors.push_back(check_tensor(p, cfg, p.model.bn.beta, g.bn_beta, "bn_beta"));
    }
    run.tensors.push_back(check_tensor(p, cfg, p.model.w_cls, g.w_cls, "w_cls"));
    run.tensors.push_back(check_tensor(p, cfg, p.model.b_cls, g.b_cls, "b_cls"));
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace gecco::testsupport

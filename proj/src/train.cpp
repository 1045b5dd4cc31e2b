#include "gecco/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "gecco/rng.hpp"

namespace gecco {

real cross_entropy(const Tensor2D& probabilities, const std::vector<int>& labels) {
  const int b = probabilities.rows();
  const int c = probabilities.cols();
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeError("cross_entropy: label count does not match batch size");
  }
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) {
      std::ostringstream os;
      os << "cross_entropy: label " << y << " outside [0," << c << ")";
      throw ConfigError(os.str());
    }
    const double p = std::max(static_cast<double>(probabilities(i, y)), 1e-12);
    total -= std::log(p);
  }
  return static_cast<real>(total / b);
}

namespace {

// Scatters pooled gradients back to the winning column of each window.
Tensor2D unpool_gradient(const Tensor2D& dpooled, const std::vector<int>& argmax, int src_cols,
                         int k) {
  Tensor2D out(dpooled.rows(), src_cols, real(0));
  const int windows = dpooled.cols();
  for (int i = 0; i < dpooled.rows(); ++i) {
    for (int w = 0; w < windows; ++w) {
      const int off = argmax[static_cast<std::size_t>(i) * windows + w];
      out(i, w * k + off) += dpooled(i, w);
    }
  }
  return out;
}

Tensor2D adjacency_matrix(int b, AdjacencyMode mode) {
  const real v = mode == AdjacencyMode::AllOnes ? real(1) : real(1) / static_cast<real>(b);
  return Tensor2D(b, b, v);
}

}  // namespace

Gradients backward(const GeccoModel& model, const ModelConfig& config, const ForwardTrace& trace,
                   const std::vector<int>& labels) {
  if (trace.mode != Mode::Train) {
    throw ConfigError("backward: trace must come from a train-mode forward");
  }
  const int b = trace.probabilities.rows();
  const int c = trace.probabilities.cols();
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeError("backward: label count does not match trace batch size");
  }
  if (model.w_cls.cols() != c || trace.x1.cols() != model.w1.rows()) {
    throw ShapeError("backward: trace/model shape mismatch");
  }

  Gradients g;

  // Softmax + cross-entropy fused: dlogits = (p - onehot)/B.
  Tensor2D dlogits = trace.probabilities;
  for (int i = 0; i < b; ++i) {
    dlogits(i, labels[static_cast<std::size_t>(i)]) -= real(1);
  }
  dlogits = scale(dlogits, real(1) / static_cast<real>(b));

  g.w_cls = matmul(transpose(trace.x6), dlogits);
  g.b_cls = column_sums(dlogits);
  Tensor2D dx6 = matmul(dlogits, transpose(model.w_cls));

  Tensor2D dx3;
  if (trace.bypass) {
    dx3 = unpool_gradient(dx6, trace.pool_argmax, trace.x3.cols(), 2);
  } else {
    Tensor2D dx4 = dx6;
    if (config.use_attention) {
      // x6 = M x4 + x4; x4 feeds the residual, the mix, and the similarity.
      const Tensor2D& dx5 = dx6;
      const Tensor2D& m = trace.attention;
      const Tensor2D& s = trace.attention_scores;
      const Tensor2D& x4 = trace.x4;
      dx4 = add(dx4, matmul(transpose(m), dx5));
      Tensor2D dm = matmul(dx5, transpose(x4));
      // M[:,j] = S[:,j]/c_j  =>  dS = (dM - colsum(dM .* M)) / c_j
      Tensor2D t(1, b, real(0));
      for (int j = 0; j < b; ++j) {
        real acc = real(0);
        for (int i = 0; i < b; ++i) acc += dm(i, j) * m(i, j);
        t(0, j) = acc;
      }
      Tensor2D ds(b, b);
      for (int j = 0; j < b; ++j) {
        const real inv = real(1) / trace.attention_colsum(0, j);
        for (int i = 0; i < b; ++i) ds(i, j) = (dm(i, j) - t(0, j)) * inv;
      }
      Tensor2D dt = ds;
      for (std::size_t i = 0; i < dt.size(); ++i) {
        const real sv = s.data()[i];
        dt.data()[i] *= sv * (real(1) - sv);
      }
      dx4 = add(dx4, matmul(add(dt, transpose(dt)), x4));
    }

    Tensor2D dy = unpool_gradient(dx4, trace.pool_argmax, trace.bn_out.cols(), 2);

    // Batch-norm backward through the train-mode batch statistics.
    const Tensor2D& xhat = trace.bn_xhat;
    const int d = dy.cols();
    g.bn_gamma = Tensor2D(1, d, real(0));
    g.bn_beta = Tensor2D(1, d, real(0));
    Tensor2D dxhat(b, d);
    for (int j = 0; j < d; ++j) {
      real dgam = real(0), dbet = real(0);
      for (int i = 0; i < b; ++i) {
        dgam += dy(i, j) * xhat(i, j);
        dbet += dy(i, j);
      }
      g.bn_gamma(0, j) = dgam;
      g.bn_beta(0, j) = dbet;
    }
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < d; ++j) dxhat(i, j) = dy(i, j) * model.bn.gamma(0, j);
    }
    Tensor2D dg(b, d);
    for (int j = 0; j < d; ++j) {
      real sum_dxhat = real(0), sum_dxhat_xhat = real(0);
      for (int i = 0; i < b; ++i) {
        sum_dxhat += dxhat(i, j);
        sum_dxhat_xhat += dxhat(i, j) * xhat(i, j);
      }
      const real inv_b = trace.bn_inv_std(0, j) / static_cast<real>(b);
      for (int i = 0; i < b; ++i) {
        dg(i, j) =
            inv_b * (static_cast<real>(b) * dxhat(i, j) - sum_dxhat - xhat(i, j) * sum_dxhat_xhat);
      }
    }

    // Graph layers, newest first. H_l = sigmoid(P_l W2_l [+ H_{l-1}]).
    const Tensor2D a = adjacency_matrix(b, config.adjacency_mode);
    Tensor2D dh = std::move(dg);
    const int layers = static_cast<int>(model.w2.size());
    g.w2.assign(static_cast<std::size_t>(layers), Tensor2D());
    for (int l = layers - 1; l >= 0; --l) {
      const Tensor2D& h = trace.gcn_out[static_cast<std::size_t>(l)];
      const Tensor2D& p = trace.gcn_pre[static_cast<std::size_t>(l)];
      Tensor2D dq = dh;
      for (std::size_t i = 0; i < dq.size(); ++i) {
        const real hv = h.data()[i];
        dq.data()[i] *= hv * (real(1) - hv);
      }
      g.w2[static_cast<std::size_t>(l)] = matmul(transpose(p), dq);
      Tensor2D dp = matmul(dq, transpose(model.w2[static_cast<std::size_t>(l)]));
      Tensor2D dh_prev = matmul(transpose(a), dp);
      if (config.gcn_self_term) dh_prev = add(dh_prev, dq);
      dh = std::move(dh_prev);
    }
    dx3 = std::move(dh);
  }

  // x3 = relu(x2 .* mask), x2 = relu(z1).
  Tensor2D dx2d = dx3;
  for (std::size_t i = 0; i < dx2d.size(); ++i) {
    if (!(trace.x2d.data()[i] > real(0))) dx2d.data()[i] = real(0);
  }
  Tensor2D dz1 = hadamard(dx2d, trace.dropout_mask);
  for (std::size_t i = 0; i < dz1.size(); ++i) {
    if (!(trace.x2.data()[i] > real(0))) dz1.data()[i] = real(0);
  }
  g.w1 = matmul(transpose(trace.x1), dz1);
  g.b1 = column_sums(dz1);
  return g;
}

namespace {

Tensor2D zeros_like(const Tensor2D& t) { return Tensor2D(t.rows(), t.cols(), real(0)); }

}  // namespace

AdamState make_adam_state(const GeccoModel& model, real lr) {
  AdamState st;
  st.lr = lr;
  st.m.w1 = zeros_like(model.w1);
  st.m.b1 = zeros_like(model.b1);
  st.m.w_cls = zeros_like(model.w_cls);
  st.m.b_cls = zeros_like(model.b_cls);
  for (const auto& w : model.w2) st.m.w2.push_back(zeros_like(w));
  if (!model.bn.gamma.empty()) {
    st.m.bn_gamma = zeros_like(model.bn.gamma);
    st.m.bn_beta = zeros_like(model.bn.beta);
  }
  st.v = st.m;
  return st;
}

namespace {

void adam_update_tensor(Tensor2D& param, const Tensor2D& grad, Tensor2D& m, Tensor2D& v,
                        const AdamState& st, real bc1, real bc2) {
  if (grad.empty()) return;
  if (!param.same_shape(grad)) {
    throw ShapeError("adam_step: gradient shape " + grad.shape_str() + " vs parameter " +
                     param.shape_str());
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const real gv = grad.data()[i];
    m.data()[i] = st.beta1 * m.data()[i] + (real(1) - st.beta1) * gv;
    v.data()[i] = st.beta2 * v.data()[i] + (real(1) - st.beta2) * gv * gv;
    const real mhat = m.data()[i] / bc1;
    const real vhat = v.data()[i] / bc2;
    param.data()[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

}  // namespace

void adam_step(AdamState& state, GeccoModel& model, const Gradients& grads) {
  state.step += 1;
  const real bc1 = real(1) - static_cast<real>(std::pow(state.beta1, state.step));
  const real bc2 = real(1) - static_cast<real>(std::pow(state.beta2, state.step));
  adam_update_tensor(model.w1, grads.w1, state.m.w1, state.v.w1, state, bc1, bc2);
  adam_update_tensor(model.b1, grads.b1, state.m.b1, state.v.b1, state, bc1, bc2);
  for (std::size_t l = 0; l < model.w2.size(); ++l) {
    if (l < grads.w2.size()) {
      adam_update_tensor(model.w2[l], grads.w2[l], state.m.w2[l], state.v.w2[l], state, bc1, bc2);
    }
  }
  if (!model.bn.gamma.empty() && !grads.bn_gamma.empty()) {
    adam_update_tensor(model.bn.gamma, grads.bn_gamma, state.m.bn_gamma, state.v.bn_gamma, state,
                       bc1, bc2);
    adam_update_tensor(model.bn.beta, grads.bn_beta, state.m.bn_beta, state.v.bn_beta, state, bc1,
                       bc2);
  }
  adam_update_tensor(model.w_cls, grads.w_cls, state.m.w_cls, state.v.w_cls, state, bc1, bc2);
  adam_update_tensor(model.b_cls, grads.b_cls, state.m.b_cls, state.v.b_cls, state, bc1, bc2);
}

real evaluate_accuracy(GeccoModel& model, const ModelConfig& config, const Dataset& data) {
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  const Mode saved = model.mode;
  model.mode = Mode::Eval;
  std::size_t correct = 0;
  for (const Batch& batch : batches(data, config.batch_size, std::nullopt, false)) {
    const ForwardTrace tr = forward(model, config, batch.x);
    for (int i = 0; i < tr.probabilities.rows(); ++i) {
      int best = 0;
      for (int j = 1; j < tr.probabilities.cols(); ++j) {
        if (tr.probabilities(i, j) > tr.probabilities(i, best)) best = j;
      }
      if (best == batch.labels[static_cast<std::size_t>(i)]) ++correct;
    }
  }
  model.mode = saved;
  return static_cast<real>(static_cast<double>(correct) / static_cast<double>(data.size()));
}

std::vector<real> evaluate_per_class_accuracy(GeccoModel& model, const ModelConfig& config,
                                              const Dataset& data) {
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  const Mode saved = model.mode;
  model.mode = Mode::Eval;
  std::vector<std::size_t> correct(static_cast<std::size_t>(config.num_classes), 0);
  std::vector<std::size_t> total(static_cast<std::size_t>(config.num_classes), 0);
  for (const Batch& batch : batches(data, config.batch_size, std::nullopt, false)) {
    const ForwardTrace tr = forward(model, config, batch.x);
    for (int i = 0; i < tr.probabilities.rows(); ++i) {
      int best = 0;
      for (int j = 1; j < tr.probabilities.cols(); ++j) {
        if (tr.probabilities(i, j) > tr.probabilities(i, best)) best = j;
      }
      const int y = batch.labels[static_cast<std::size_t>(i)];
      ++total[static_cast<std::size_t>(y)];
      if (best == y) ++correct[static_cast<std::size_t>(y)];
    }
  }
  model.mode = saved;
  std::vector<real> acc(static_cast<std::size_t>(config.num_classes), real(0));
  for (std::size_t k = 0; k < acc.size(); ++k) {
    acc[k] = total[k] == 0 ? real(0)
                           : static_cast<real>(static_cast<double>(correct[k]) /
                                               static_cast<double>(total[k]));
  }
  return acc;
}

TrainReport train_loop(GeccoModel& model, const ModelConfig& config, const Dataset& train_data,
                       const Dataset& eval_data, const TrainOptions& options) {
  config.validate();
  if (train_data.size() == 0) throw DataError("train_loop: empty training dataset");

  TrainReport report;
  if (options.epochs == 0) return report;

  Rng master(options.seed);
  AdamState adam = make_adam_state(model, options.lr);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t shuffle_seed = master();
    model.mode = Mode::Train;

    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    for (const Batch& batch : batches(train_data, config.batch_size, shuffle_seed, true)) {
      const std::uint64_t dropout_seed = master();
      const ForwardTrace tr = forward(model, config, batch.x, dropout_seed);
      loss_sum += static_cast<double>(cross_entropy(tr.probabilities, batch.labels)) *
                  batch.labels.size();
      for (int i = 0; i < tr.probabilities.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < tr.probabilities.cols(); ++j) {
          if (tr.probabilities(i, j) > tr.probabilities(i, best)) best = j;
        }
        if (best == batch.labels[static_cast<std::size_t>(i)]) ++correct;
      }
      seen += batch.labels.size();
      const Gradients grads = backward(model, config, tr, batch.labels);
      adam_step(adam, model, grads);
    }

    EpochStats stats;
    stats.loss = seen == 0 ? real(0) : static_cast<real>(loss_sum / seen);
    stats.train_accuracy =
        seen == 0 ? real(0) : static_cast<real>(static_cast<double>(correct) / seen);
    stats.eval_accuracy =
        eval_data.size() == 0 ? real(0) : evaluate_accuracy(model, config, eval_data);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(stats);
  }
  model.mode = Mode::Eval;
  return report;
}

}  // namespace gecco

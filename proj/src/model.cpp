#include "gecco/model.hpp"

#include <cmath>
#include <sstream>

#include "gecco/rng.hpp"

namespace gecco {

namespace {
constexpr real kBnEps = real(1e-5);
constexpr real kBnMomentum = real(0.1);
}  // namespace

void ModelConfig::validate() const {
  std::ostringstream os;
  if (image_h < 1 || image_w < 1) {
    os << "image size must be positive, got " << image_h << "x" << image_w;
    throw ConfigError(os.str());
  }
  if (d_out < 2) {
    os << "d_out must be >= 2 (max pooling halves it), got " << d_out;
    throw ConfigError(os.str());
  }
  if (num_classes < 2) {
    os << "num_classes must be >= 2, got " << num_classes;
    throw ConfigError(os.str());
  }
  if (batch_size < 1) {
    os << "batch_size must be >= 1, got " << batch_size;
    throw ConfigError(os.str());
  }
  if (!(dropout_rate >= real(0) && dropout_rate < real(1))) {
    os << "dropout_rate must lie in [0,1), got " << dropout_rate;
    throw ConfigError(os.str());
  }
  if (gcn_layers < 0) {
    os << "gcn_layers must be >= 0, got " << gcn_layers;
    throw ConfigError(os.str());
  }
}

std::size_t GeccoModel::parameter_count() const {
  std::size_t n = w1.size() + b1.size() + w_cls.size() + b_cls.size();
  for (const auto& w : w2) n += w.size();
  if (!bn.gamma.empty()) n += bn.gamma.size() + bn.beta.size();
  return n;
}

namespace {

Tensor2D glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  const real limit = static_cast<real>(std::sqrt(6.0 / (fan_in + fan_out)));
  Tensor2D w(fan_in, fan_out);
  for (real& v : w.data()) v = uniform_real(rng, -limit, limit);
  return w;
}

}  // namespace

GeccoModel init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  GeccoModel m;
  const int d = config.d_out;
  m.w1 = glorot_uniform(config.input_dim(), d, rng);
  m.b1 = Tensor2D(1, d, real(0));
  if (config.use_gcn && config.gcn_layers >= 1) {
    for (int l = 0; l < config.gcn_layers; ++l) {
      m.w2.push_back(glorot_uniform(d, d, rng));
    }
    m.bn.gamma = Tensor2D(1, d, real(1));
    m.bn.beta = Tensor2D(1, d, real(0));
    m.bn.running_mean = Tensor2D(1, d, real(0));
    m.bn.running_var = Tensor2D(1, d, real(1));
  }
  m.w_cls = glorot_uniform(config.pooled_dim(), config.num_classes, rng);
  m.b_cls = Tensor2D(1, config.num_classes, real(0));
  return m;
}

Tensor2D vectorize(const std::vector<Tensor2D>& images) {
  if (images.empty()) throw ShapeError("vectorize: empty batch");
  const int h = images.front().rows();
  const int w = images.front().cols();
  Tensor2D x(static_cast<int>(images.size()), h * w);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Tensor2D& img = images[b];
    if (img.rows() != h || img.cols() != w) {
      std::ostringstream os;
      os << "vectorize: ragged batch, image 0 is " << h << "x" << w << " but image " << b
         << " is " << img.shape_str();
      throw ShapeError(os.str());
    }
    std::copy(img.data().begin(), img.data().end(), x.row_ptr(static_cast<int>(b)));
  }
  return x;
}

BatchNormResult batchnorm(const Tensor2D& x, BatchNormState& state, Mode mode,
                          bool update_running_stats) {
  const int b = x.rows();
  const int d = x.cols();
  if (state.gamma.cols() != d) {
    throw ShapeError("batchnorm: state width " + state.gamma.shape_str() + " vs input " +
                     x.shape_str());
  }
  if (mode == Mode::Train && b < 2) {
    throw ConfigError(
        "batchnorm: train mode needs batch size >= 2 for batch statistics; "
        "switch to eval mode or use a larger batch");
  }

  Tensor2D mean(1, d, real(0));
  Tensor2D var(1, d, real(0));
  if (mode == Mode::Train) {
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < d; ++j) mean(0, j) += x(i, j);
    }
    for (int j = 0; j < d; ++j) mean(0, j) /= static_cast<real>(b);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < d; ++j) {
        const real c = x(i, j) - mean(0, j);
        var(0, j) += c * c;
      }
    }
    for (int j = 0; j < d; ++j) var(0, j) /= static_cast<real>(b);
    if (update_running_stats) {
      for (int j = 0; j < d; ++j) {
        // Unbiased variance feeds the running estimate, as is conventional.
        const real unbiased = var(0, j) * static_cast<real>(b) / static_cast<real>(b - 1);
        state.running_mean(0, j) =
            (real(1) - kBnMomentum) * state.running_mean(0, j) + kBnMomentum * mean(0, j);
        state.running_var(0, j) =
            (real(1) - kBnMomentum) * state.running_var(0, j) + kBnMomentum * unbiased;
      }
    }
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  BatchNormResult res{Tensor2D(b, d), Tensor2D(b, d), Tensor2D(1, d)};
  for (int j = 0; j < d; ++j) {
    res.inv_std(0, j) = real(1) / std::sqrt(var(0, j) + kBnEps);
  }
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < d; ++j) {
      const real xh = (x(i, j) - mean(0, j)) * res.inv_std(0, j);
      res.xhat(i, j) = xh;
      res.out(i, j) = state.gamma(0, j) * xh + state.beta(0, j);
    }
  }
  ensure_finite(res.out, "batchnorm");
  return res;
}

Tensor2D attention_mixing_matrix(const Tensor2D& x4) {
  const Tensor2D s = sigmoid(matmul(x4, transpose(x4)));
  const Tensor2D csum = column_sums(s);
  Tensor2D m = s;
  for (int j = 0; j < m.cols(); ++j) {
    const real inv = real(1) / csum(0, j);
    for (int i = 0; i < m.rows(); ++i) m(i, j) *= inv;
  }
  ensure_finite(m, "attention_mixing_matrix");
  return m;
}

namespace {

Tensor2D adjacency_matrix(int b, AdjacencyMode mode) {
  const real v = mode == AdjacencyMode::AllOnes ? real(1) : real(1) / static_cast<real>(b);
  return Tensor2D(b, b, v);
}

Tensor2D dropout_mask(int rows, int cols, real rate, std::uint64_t seed) {
  Tensor2D mask(rows, cols, real(1));
  if (rate > real(0)) {
    Rng rng(seed);
    const real keep_scale = real(1) / (real(1) - rate);
    for (real& v : mask.data()) {
      v = uniform_unit(rng) < rate ? real(0) : keep_scale;
    }
  }
  return mask;
}

}  // namespace

ForwardTrace forward(GeccoModel& model, const ModelConfig& config, const Tensor2D& x,
                     std::uint64_t dropout_seed, bool update_running_stats) {
  config.validate();
  if (x.cols() != config.input_dim()) {
    std::ostringstream os;
    os << "forward: input " << x.shape_str() << " does not match flattened image size "
       << config.input_dim();
    throw ShapeError(os.str());
  }
  const int b = x.rows();
  const bool train = model.mode == Mode::Train;

  ForwardTrace tr;
  tr.mode = model.mode;
  tr.x1 = x;
  tr.x2 = relu(row_broadcast_add(matmul(x, model.w1), model.b1));
  tr.dropout_mask = train ? dropout_mask(b, config.d_out, config.dropout_rate, dropout_seed)
                          : Tensor2D(b, config.d_out, real(1));
  tr.x2d = hadamard(tr.x2, tr.dropout_mask);
  tr.x3 = relu(tr.x2d);

  tr.bypass = b == 1 || !config.use_gcn || config.gcn_layers == 0;
  if (tr.bypass) {
    // Graph construction is dropped entirely; pooled FC features go straight
    // to the classifier so one head serves both routes.
    MaxPoolResult pool = maxpool_features_with_argmax(tr.x3, 2);
    tr.x4 = pool.values;
    tr.pool_argmax = std::move(pool.argmax);
    tr.x6 = tr.x4;
  } else {
    if (!model.has_graph_path() || static_cast<int>(model.w2.size()) != config.gcn_layers) {
      throw ConfigError("forward: model has no graph parameters for this config");
    }
    const Tensor2D a = adjacency_matrix(b, config.adjacency_mode);
    const Tensor2D* h_prev = &tr.x3;
    for (int l = 0; l < config.gcn_layers; ++l) {
      tr.gcn_pre.push_back(matmul(a, *h_prev));
      Tensor2D q = matmul(tr.gcn_pre.back(), model.w2[static_cast<std::size_t>(l)]);
      if (config.gcn_self_term) q = add(q, *h_prev);
      tr.gcn_out.push_back(sigmoid(q));
      h_prev = &tr.gcn_out.back();
    }
    BatchNormResult bn = batchnorm(*h_prev, model.bn, model.mode, update_running_stats);
    tr.bn_xhat = std::move(bn.xhat);
    tr.bn_inv_std = std::move(bn.inv_std);
    tr.bn_out = std::move(bn.out);
    MaxPoolResult pool = maxpool_features_with_argmax(tr.bn_out, 2);
    tr.x4 = pool.values;
    tr.pool_argmax = std::move(pool.argmax);

    if (config.use_attention) {
      tr.attention_scores = sigmoid(matmul(tr.x4, transpose(tr.x4)));
      tr.attention_colsum = column_sums(tr.attention_scores);
      tr.attention = tr.attention_scores;
      for (int j = 0; j < b; ++j) {
        const real inv = real(1) / tr.attention_colsum(0, j);
        for (int i = 0; i < b; ++i) tr.attention(i, j) *= inv;
      }
      tr.x5 = matmul(tr.attention, tr.x4);
      tr.x6 = add(tr.x5, tr.x4);
    } else {
      tr.x6 = tr.x4;
    }
  }

  tr.logits = row_broadcast_add(matmul(tr.x6, model.w_cls), model.b_cls);
  tr.probabilities = softmax_rows(tr.logits);
  return tr;
}

}  // namespace gecco

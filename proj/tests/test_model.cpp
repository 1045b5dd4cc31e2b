#include <cmath>
#include <vector>

#include "doctest.h"
#include "gecco/model.hpp"
#include "gecco/rng.hpp"

using namespace gecco;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.image_h = 2;
  cfg.image_w = 2;
  cfg.d_out = 4;
  cfg.num_classes = 2;
  cfg.batch_size = 2;
  cfg.dropout_rate = real(0);
  cfg.gcn_layers = 1;
  return cfg;
}

Tensor2D random_tensor(int r, int c, Rng& rng, real lo = real(-1), real hi = real(1)) {
  Tensor2D t(r, c);
  for (real& v : t.data()) v = uniform_real(rng, lo, hi);
  return t;
}

}  // namespace

TEST_CASE("vectorize flattens row-major and rejects ragged batches") {
  const Tensor2D img = Tensor2D::from_rows({{1, 2}, {3, 4}});
  const Tensor2D x = vectorize({img});
  CHECK(x.rows() == 1);
  CHECK(x.cols() == 4);
  CHECK(x(0, 0) == real(1));
  CHECK(x(0, 1) == real(2));
  CHECK(x(0, 2) == real(3));
  CHECK(x(0, 3) == real(4));

  const Tensor2D a = Tensor2D::from_rows({{1, 2, 3}});
  const Tensor2D b = Tensor2D::from_rows({{4, 5, 6}});
  const Tensor2D two = vectorize({a, b});
  CHECK(two.rows() == 2);
  CHECK(two(0, 0) == real(1));
  CHECK(two(1, 2) == real(6));

  CHECK_THROWS_AS(vectorize({Tensor2D(2, 2), Tensor2D(2, 3)}), ShapeError);
}

TEST_CASE("vectorize round-trips through an unflatten oracle") {
  Rng rng(29);
  std::vector<Tensor2D> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(random_tensor(8, 8, rng, real(0), real(1)));
  const Tensor2D x = vectorize(batch);
  for (int b = 0; b < 4; ++b) {
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        CHECK(x(b, r * 8 + c) == batch[static_cast<std::size_t>(b)](r, c));
      }
    }
  }
}

// Recomputes the whole pipeline with scalar double-precision loops and
// hand-set weights, then checks forward against it.
TEST_CASE("forward matches a step-by-step scalar walkthrough") {
  for (const bool self_term : {false, true}) {
    CAPTURE(self_term);
    ModelConfig cfg = tiny_config();
    cfg.gcn_self_term = self_term;
    GeccoModel m = init_model(cfg, 1);

    // small deterministic weights
    auto fill = [](Tensor2D& t, real start, real step) {
      real v = start;
      for (real& x : t.data()) {
        x = v;
        v += step;
      }
    };
    fill(m.w1, real(-0.20), real(0.03));
    fill(m.b1, real(0.01), real(0.01));
    fill(m.w2[0], real(-0.10), real(0.02));
    fill(m.w_cls, real(0.05), real(-0.04));
    fill(m.b_cls, real(0.02), real(0.05));
    fill(m.bn.gamma, real(0.9), real(0.1));
    fill(m.bn.beta, real(-0.05), real(0.05));
    m.mode = Mode::Train;

    const Tensor2D x = Tensor2D::from_rows({{0.1, 0.7, 0.3, 0.9}, {0.8, 0.2, 0.6, 0.4}});
    const ForwardTrace tr = forward(m, cfg, x, 0, false);

    const int B = 2, HW = 4, D = 4, K = 2, C = 2;
    double x2[2][4], x3[2][4];
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < D; ++j) {
        double acc = m.b1(0, j);
        for (int k = 0; k < HW; ++k) acc += double(x(i, k)) * double(m.w1(k, j));
        x2[i][j] = std::max(acc, 0.0);
        x3[i][j] = x2[i][j];  // no dropout
      }
    }
    double q[2][4], h[2][4];
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < D; ++j) {
        double acc = 0.0;
        for (int k = 0; k < D; ++k) {
          double agg = 0.0;  // all-ones adjacency row: column sum
          for (int r = 0; r < B; ++r) agg += x3[r][k];
          acc += agg * double(m.w2[0](k, j));
        }
        if (self_term) acc += x3[i][j];
        q[i][j] = acc;
        h[i][j] = 1.0 / (1.0 + std::exp(-acc));
      }
    }
    double y[2][4];
    for (int j = 0; j < D; ++j) {
      double mean = 0.0;
      for (int i = 0; i < B; ++i) mean += h[i][j];
      mean /= B;
      double var = 0.0;
      for (int i = 0; i < B; ++i) var += (h[i][j] - mean) * (h[i][j] - mean);
      var /= B;
      const double inv = 1.0 / std::sqrt(var + 1e-5);
      for (int i = 0; i < B; ++i) {
        y[i][j] = double(m.bn.gamma(0, j)) * (h[i][j] - mean) * inv + double(m.bn.beta(0, j));
      }
    }
    double x4[2][2];
    for (int i = 0; i < B; ++i) {
      for (int w = 0; w < K; ++w) x4[i][w] = std::max(y[i][2 * w], y[i][2 * w + 1]);
    }
    double s[2][2], msum[2], att[2][2], x6[2][2];
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < B; ++j) {
        double dot = 0.0;
        for (int k = 0; k < K; ++k) dot += x4[i][k] * x4[j][k];
        s[i][j] = 1.0 / (1.0 + std::exp(-dot));
      }
    }
    for (int j = 0; j < B; ++j) {
      msum[j] = 0.0;
      for (int i = 0; i < B; ++i) msum[j] += s[i][j];
    }
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < B; ++j) att[i][j] = s[i][j] / msum[j];
    }
    for (int i = 0; i < B; ++i) {
      for (int k = 0; k < K; ++k) {
        double mix = 0.0;
        for (int j = 0; j < B; ++j) mix += att[i][j] * x4[j][k];
        x6[i][k] = mix + x4[i][k];
      }
    }
    double logits[2][2];
    for (int i = 0; i < B; ++i) {
      for (int c = 0; c < C; ++c) {
        double acc = double(m.b_cls(0, c));
        for (int k = 0; k < K; ++k) acc += x6[i][k] * double(m.w_cls(k, c));
        logits[i][c] = acc;
      }
    }

    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < D; ++j) {
        CHECK(double(tr.x3(i, j)) == doctest::Approx(x3[i][j]).epsilon(1e-5));
        CHECK(double(tr.gcn_out[0](i, j)) == doctest::Approx(h[i][j]).epsilon(1e-5));
        CHECK(double(tr.bn_out(i, j)) == doctest::Approx(y[i][j]).epsilon(1e-4));
      }
      for (int c = 0; c < C; ++c) {
        CHECK(double(tr.logits(i, c)) == doctest::Approx(logits[i][c]).epsilon(1e-4));
      }
    }
    // probabilities are a softmax: rows sum to one
    for (int i = 0; i < B; ++i) {
      CHECK(double(tr.probabilities(i, 0) + tr.probabilities(i, 1)) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("attention mixing matrix: B=1, identical rows, random column sums") {
  const Tensor2D one = attention_mixing_matrix(Tensor2D::from_rows({{0.3, -1.2, 4.0}}));
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == doctest::Approx(1.0));

  // identical rows -> constant 1/B
  Tensor2D same(5, 3);
  for (int i = 0; i < 5; ++i) {
    same(i, 0) = real(0.4);
    same(i, 1) = real(-0.7);
    same(i, 2) = real(1.1);
  }
  const Tensor2D msame = attention_mixing_matrix(same);
  for (std::size_t i = 0; i < msame.size(); ++i) {
    CHECK(msame.data()[i] == doctest::Approx(0.2).epsilon(1e-5));
  }

  Rng rng(17);
  const Tensor2D x4 = random_tensor(4, 6, rng, real(-2), real(2));
  const Tensor2D m = attention_mixing_matrix(x4);
  for (int j = 0; j < 4; ++j) {
    real col = real(0);
    for (int i = 0; i < 4; ++i) {
      CHECK(m(i, j) > real(0));
      CHECK(m(i, j) <= real(1));
      col += m(i, j);
    }
    CHECK(col == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("zero x4 gives the sigmoid(0) fixed point through attention") {
  // S = all 0.5, M = 1/B, X5 = M*0 = 0, X6 = 0
  Tensor2D zero(3, 4, real(0));
  const Tensor2D m = attention_mixing_matrix(zero);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.data()[i] == doctest::Approx(1.0 / 3).epsilon(1e-6));
  }
  const Tensor2D x5 = matmul(m, zero);
  const Tensor2D x6 = add(x5, zero);
  for (real v : x6.data()) CHECK(v == real(0));
}

TEST_CASE("batch size 1 takes the same route as a graph-off model, bit for bit") {
  ModelConfig cfg = tiny_config();
  cfg.gcn_self_term = true;
  GeccoModel m = init_model(cfg, 7);

  ModelConfig off = cfg;
  off.use_gcn = false;
  GeccoModel m_off = init_model(cfg, 7);  // same seed: graph params identical, rest shared
  m_off.w2.clear();
  m_off.bn = BatchNormState{};

  Rng rng(5);
  const Tensor2D x = random_tensor(1, 4, rng, real(0), real(1));
  const ForwardTrace a = forward(m, cfg, x);
  const ForwardTrace b = forward(m_off, off, x);
  CHECK(a.bypass);
  CHECK(b.bypass);
  for (std::size_t i = 0; i < a.logits.size(); ++i) {
    CHECK(a.logits.data()[i] == b.logits.data()[i]);
  }
}

TEST_CASE("gcn_layers = 0 with use_gcn true equals use_gcn false") {
  ModelConfig zero_layers = tiny_config();
  zero_layers.gcn_layers = 0;
  ModelConfig off = tiny_config();
  off.use_gcn = false;

  GeccoModel ma = init_model(zero_layers, 3);
  GeccoModel mb = init_model(off, 3);
  Rng rng(9);
  const Tensor2D x = random_tensor(2, 4, rng, real(0), real(1));
  const ForwardTrace a = forward(ma, zero_layers, x);
  const ForwardTrace b = forward(mb, off, x);
  for (std::size_t i = 0; i < a.logits.size(); ++i) {
    CHECK(a.logits.data()[i] == b.logits.data()[i]);
  }
}

TEST_CASE("output shapes agree with and without attention; probabilities normalized") {
  ModelConfig cfg = tiny_config();
  cfg.batch_size = 5;
  GeccoModel m = init_model(cfg, 21);
  Rng rng(22);
  const Tensor2D x = random_tensor(5, 4, rng, real(0), real(1));
  const ForwardTrace with_att = forward(m, cfg, x);
  ModelConfig no_att = cfg;
  no_att.use_attention = false;
  const ForwardTrace without_att = forward(m, no_att, x);
  CHECK(with_att.logits.rows() == without_att.logits.rows());
  CHECK(with_att.logits.cols() == without_att.logits.cols());
  for (int i = 0; i < 5; ++i) {
    real s = real(0);
    for (int j = 0; j < 2; ++j) s += with_att.probabilities(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("graph path is equivariant to permuting the batch rows") {
  ModelConfig cfg = tiny_config();
  cfg.batch_size = 4;
  cfg.gcn_self_term = true;  // keeps rows distinct through the graph layer
  GeccoModel m = init_model(cfg, 33);
  Rng rng(34);
  const Tensor2D x = random_tensor(4, 4, rng, real(0), real(1));
  const ForwardTrace base = forward(m, cfg, x);

  const std::vector<int> perm = {2, 0, 3, 1};
  Tensor2D xp(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) xp(i, j) = x(perm[static_cast<std::size_t>(i)], j);
  }
  const ForwardTrace permuted = forward(m, cfg, xp);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(permuted.logits(i, j) ==
            doctest::Approx(base.logits(perm[static_cast<std::size_t>(i)], j)).epsilon(1e-4));
    }
  }
}

TEST_CASE("all-ones adjacency aggregation equals the column-sum vector") {
  ModelConfig cfg = tiny_config();
  cfg.batch_size = 3;
  GeccoModel m = init_model(cfg, 44);
  Rng rng(45);
  const Tensor2D x = random_tensor(3, 4, rng, real(0), real(1));
  const ForwardTrace tr = forward(m, cfg, x);
  const Tensor2D cs = column_sums(tr.x3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(tr.gcn_pre[0](i, j) == doctest::Approx(double(cs(0, j))).epsilon(1e-6));
    }
  }
}

TEST_CASE("batchnorm train normalizes, eval uses running stats, B=1 train rejected") {
  Rng rng(55);
  const Tensor2D x = random_tensor(16, 5, rng, real(-3), real(3));
  BatchNormState st;
  st.gamma = Tensor2D(1, 5, real(1));
  st.beta = Tensor2D(1, 5, real(0));
  st.running_mean = Tensor2D(1, 5, real(0));
  st.running_var = Tensor2D(1, 5, real(1));

  const BatchNormResult train = batchnorm(x, st, Mode::Train);
  for (int j = 0; j < 5; ++j) {
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < 16; ++i) mean += train.out(i, j);
    mean /= 16;
    for (int i = 0; i < 16; ++i) var += (train.out(i, j) - mean) * (train.out(i, j) - mean);
    var /= 16;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }

  // two-pass scalar oracle
  for (int j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (int i = 0; i < 16; ++i) mean += x(i, j);
    mean /= 16;
    double var = 0.0;
    for (int i = 0; i < 16; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= 16;
    for (int i = 0; i < 16; ++i) {
      const double want = (x(i, j) - mean) / std::sqrt(var + 1e-5);
      CHECK(double(train.out(i, j)) == doctest::Approx(want).epsilon(1e-5));
    }
  }

  BatchNormState fresh;
  fresh.gamma = Tensor2D(1, 5, real(1));
  fresh.beta = Tensor2D(1, 5, real(0));
  fresh.running_mean = Tensor2D(1, 5, real(0));
  fresh.running_var = Tensor2D(1, 5, real(1));
  const BatchNormResult ev = batchnorm(x, fresh, Mode::Eval);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(double(ev.out.data()[i]) == doctest::Approx(double(x.data()[i])).epsilon(1e-4));
  }

  const Tensor2D single = random_tensor(1, 5, rng);
  CHECK_THROWS_AS(batchnorm(single, fresh, Mode::Train), ConfigError);
}

TEST_CASE("dropout: eval identity, train deterministic per seed, mean preserved") {
  ModelConfig cfg = tiny_config();
  cfg.dropout_rate = real(0.5);
  cfg.batch_size = 2;
  GeccoModel m = init_model(cfg, 66);

  Rng rng(67);
  const Tensor2D x = random_tensor(2, 4, rng, real(0), real(1));

  m.mode = Mode::Eval;
  const ForwardTrace ev = forward(m, cfg, x);
  for (real v : ev.dropout_mask.data()) CHECK(v == real(1));

  m.mode = Mode::Train;
  const ForwardTrace t1 = forward(m, cfg, x, 99, false);
  const ForwardTrace t2 = forward(m, cfg, x, 99, false);
  for (std::size_t i = 0; i < t1.x2d.size(); ++i) {
    CHECK(t1.x2d.data()[i] == t2.x2d.data()[i]);
  }

  // E[dropout(x)] == x: average the masked activations over many seeds
  Tensor2D mean_x2d(2, 4, real(0));
  const int n_seeds = 1500;
  for (int s = 0; s < n_seeds; ++s) {
    const ForwardTrace tr = forward(m, cfg, x, static_cast<std::uint64_t>(s), false);
    for (std::size_t i = 0; i < mean_x2d.size(); ++i) {
      mean_x2d.data()[i] += tr.x2d.data()[i];
    }
  }
  for (std::size_t i = 0; i < mean_x2d.size(); ++i) {
    const real want = ev.x2.data()[i];
    if (want > real(0.05)) {
      CHECK(mean_x2d.data()[i] / n_seeds == doctest::Approx(double(want)).epsilon(0.05));
    }
  }
}

TEST_CASE("config validation catches bad hyperparameters") {
  ModelConfig cfg = tiny_config();
  cfg.d_out = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.dropout_rate = real(1);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.gcn_layers = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  const GeccoModel m = init_model(cfg, 0);
  CHECK(m.parameter_count() == 4u * 4 + 4 + 16 + 8 + 2 * 2 + 2);
}

TEST_CASE("forward rejects mismatched input width") {
  ModelConfig cfg = tiny_config();
  GeccoModel m = init_model(cfg, 0);
  CHECK_THROWS_AS(forward(m, cfg, Tensor2D(2, 5)), ShapeError);
}

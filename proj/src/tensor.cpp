#include "gecco/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gecco {

Tensor2D::Tensor2D(int rows, int cols, real fill) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    std::ostringstream os;
    os << "Tensor2D dimensions must be >= 1, got " << rows << "x" << cols;
    throw ShapeError(os.str());
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Tensor2D Tensor2D::from_rows(std::initializer_list<std::initializer_list<real>> rows) {
  const int r = static_cast<int>(rows.size());
  if (r == 0) throw ShapeError("Tensor2D::from_rows: no rows given");
  const int c = static_cast<int>(rows.begin()->size());
  Tensor2D t(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) {
      throw ShapeError("Tensor2D::from_rows: ragged rows");
    }
    std::copy(row.begin(), row.end(), t.row_ptr(i));
    ++i;
  }
  return t;
}

std::string Tensor2D::shape_str() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

void ensure_finite(const Tensor2D& t, const char* op_name) {
  for (real v : t.data()) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << op_name << ": non-finite value in " << t.shape_str() << " result";
      throw NumericError(os.str());
    }
  }
}

namespace {

void require_nonempty(const Tensor2D& t, const char* op) {
  if (t.empty()) throw ShapeError(std::string(op) + ": empty tensor");
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor2D& a, const Tensor2D& b) {
  std::ostringstream os;
  os << op << ": shape mismatch " << a.shape_str() << " vs " << b.shape_str();
  throw ShapeError(os.str());
}

}  // namespace

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  require_nonempty(a, "matmul");
  require_nonempty(b, "matmul");
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  Tensor2D c(a.rows(), b.cols(), real(0));
  // ikj order: streams b and c rows, good cache behavior for row-major data.
  for (int i = 0; i < a.rows(); ++i) {
    real* crow = c.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      const real aik = a(i, k);
      const real* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  ensure_finite(c, "matmul");
  return c;
}

Tensor2D add(const Tensor2D& a, const Tensor2D& b) {
  require_nonempty(a, "add");
  if (!a.same_shape(b)) shape_mismatch("add", a, b);
  Tensor2D c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  ensure_finite(c, "add");
  return c;
}

Tensor2D sub(const Tensor2D& a, const Tensor2D& b) {
  require_nonempty(a, "sub");
  if (!a.same_shape(b)) shape_mismatch("sub", a, b);
  Tensor2D c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  ensure_finite(c, "sub");
  return c;
}

Tensor2D hadamard(const Tensor2D& a, const Tensor2D& b) {
  require_nonempty(a, "hadamard");
  if (!a.same_shape(b)) shape_mismatch("hadamard", a, b);
  Tensor2D c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  ensure_finite(c, "hadamard");
  return c;
}

Tensor2D scale(const Tensor2D& a, real s) {
  require_nonempty(a, "scale");
  Tensor2D c = a;
  for (real& v : c.data()) v *= s;
  ensure_finite(c, "scale");
  return c;
}

Tensor2D row_broadcast_add(const Tensor2D& a, const Tensor2D& bias) {
  require_nonempty(a, "row_broadcast_add");
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    shape_mismatch("row_broadcast_add", a, bias);
  }
  Tensor2D c = a;
  for (int i = 0; i < c.rows(); ++i) {
    real* row = c.row_ptr(i);
    const real* brow = bias.row_ptr(0);
    for (int j = 0; j < c.cols(); ++j) row[j] += brow[j];
  }
  ensure_finite(c, "row_broadcast_add");
  return c;
}

Tensor2D transpose(const Tensor2D& a) {
  require_nonempty(a, "transpose");
  Tensor2D c(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) c(j, i) = a(i, j);
  }
  return c;
}

Tensor2D column_sums(const Tensor2D& a) {
  require_nonempty(a, "column_sums");
  Tensor2D c(1, a.cols(), real(0));
  for (int i = 0; i < a.rows(); ++i) {
    const real* row = a.row_ptr(i);
    real* out = c.row_ptr(0);
    for (int j = 0; j < a.cols(); ++j) out[j] += row[j];
  }
  ensure_finite(c, "column_sums");
  return c;
}

Tensor2D elementwise(const Tensor2D& a, const std::function<real(real)>& f) {
  require_nonempty(a, "elementwise");
  Tensor2D c = a;
  for (real& v : c.data()) v = f(v);
  ensure_finite(c, "elementwise");
  return c;
}

Tensor2D relu(const Tensor2D& a) {
  require_nonempty(a, "relu");
  Tensor2D c = a;
  for (real& v : c.data()) v = v > real(0) ? v : real(0);
  return c;
}

Tensor2D sigmoid(const Tensor2D& a) {
  require_nonempty(a, "sigmoid");
  Tensor2D c = a;
  for (real& v : c.data()) v = real(1) / (real(1) + std::exp(-v));
  ensure_finite(c, "sigmoid");
  return c;
}

Tensor2D softmax_rows(const Tensor2D& a) {
  require_nonempty(a, "softmax_rows");
  Tensor2D c = a;
  for (int i = 0; i < c.rows(); ++i) {
    real* row = c.row_ptr(i);
    real mx = row[0];
    for (int j = 1; j < c.cols(); ++j) mx = std::max(mx, row[j]);
    real sum = real(0);
    for (int j = 0; j < c.cols(); ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < c.cols(); ++j) row[j] /= sum;
  }
  ensure_finite(c, "softmax_rows");
  return c;
}

MaxPoolResult maxpool_features_with_argmax(const Tensor2D& a, int k) {
  require_nonempty(a, "maxpool_features");
  if (k < 1 || k > a.cols()) {
    std::ostringstream os;
    os << "maxpool_features: window " << k << " invalid for " << a.shape_str();
    throw ShapeError(os.str());
  }
  const int out_cols = a.cols() / k;  // trailing partial window discarded
  MaxPoolResult res{Tensor2D(a.rows(), out_cols), {}};
  res.argmax.resize(static_cast<std::size_t>(a.rows()) * out_cols);
  for (int i = 0; i < a.rows(); ++i) {
    const real* row = a.row_ptr(i);
    for (int w = 0; w < out_cols; ++w) {
      int best = 0;
      real mx = row[w * k];
      for (int o = 1; o < k; ++o) {
        if (row[w * k + o] > mx) {
          mx = row[w * k + o];
          best = o;
        }
      }
      res.values(i, w) = mx;
      res.argmax[static_cast<std::size_t>(i) * out_cols + w] = best;
    }
  }
  return res;
}

Tensor2D maxpool_features(const Tensor2D& a, int k) {
  return maxpool_features_with_argmax(a, k).values;
}

}  // namespace gecco

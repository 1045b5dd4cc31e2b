#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "gecco/errors.hpp"

namespace gecco {

#ifdef GECCO_REAL64
using real = double;
#else
using real = float;
#endif

// Dense row-major 2D matrix of `real`. The single value type for
// activations, weights, adjacency and attention matrices.
//
// A default-constructed Tensor2D is the empty placeholder (0x0); every
// operation rejects it. All ops verify their outputs are finite and raise
// NumericError otherwise.
class Tensor2D {
 public:
  Tensor2D() = default;

  Tensor2D(int rows, int cols, real fill = real(0));

  // Build from explicit rows, e.g. Tensor2D::from_rows({{1,2},{3,4}}).
  static Tensor2D from_rows(std::initializer_list<std::initializer_list<real>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  real& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  real operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  real* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const real* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  std::vector<real>& data() { return data_; }
  const std::vector<real>& data() const { return data_; }

  bool same_shape(const Tensor2D& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<real> data_;
};

// Throws NumericError if any entry of `t` is NaN or Inf.
void ensure_finite(const Tensor2D& t, const char* op_name);

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
Tensor2D add(const Tensor2D& a, const Tensor2D& b);
Tensor2D sub(const Tensor2D& a, const Tensor2D& b);
Tensor2D hadamard(const Tensor2D& a, const Tensor2D& b);
Tensor2D scale(const Tensor2D& a, real s);

// Adds the 1xC bias row to every row of `a`.
Tensor2D row_broadcast_add(const Tensor2D& a, const Tensor2D& bias);

Tensor2D transpose(const Tensor2D& a);

// 1xC row of per-column sums.
Tensor2D column_sums(const Tensor2D& a);

// Applies `f` to every entry.
Tensor2D elementwise(const Tensor2D& a, const std::function<real(real)>& f);
Tensor2D relu(const Tensor2D& a);
Tensor2D sigmoid(const Tensor2D& a);

// Row-wise softmax with max-subtraction stabilization; rows sum to 1.
Tensor2D softmax_rows(const Tensor2D& a);

// Max over disjoint windows of k consecutive features; BxD -> Bx(D/k),
// a trailing partial window is discarded.
Tensor2D maxpool_features(const Tensor2D& a, int k);

struct MaxPoolResult {
  Tensor2D values;
  // Winning column offset within each window, row-major over (row, window).
  std::vector<int> argmax;
};
MaxPoolResult maxpool_features_with_argmax(const Tensor2D& a, int k);

}  // namespace gecco

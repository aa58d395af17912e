#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "dtsc/matrix.hpp"

namespace dtsc {

inline constexpr double kNormFloor = 1e-12;

// Row-wise softmax with per-row max subtraction. Errors on non-finite input.
Matrix softmax_rows(const Matrix& m);

// log(softmax) rows, same stabilization; used by the cross-entropy loss.
Matrix log_softmax_rows(const Matrix& m);

// Cosine similarity, clamped to [-1, 1]. Errors on length mismatch and on
// either norm at or below kNormFloor.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct AdamState {
  Matrix m;  // first moment
  Matrix v;  // second moment
  std::int64_t step = 0;

  explicit AdamState(const Matrix& params)
      : m(params.rows(), params.cols()), v(params.rows(), params.cols()) {}
  AdamState() = default;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update in place.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg);

// Central finite differences of loss_fn around params, coordinate by coordinate.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& loss_fn,
                        const Matrix& params, double h);

struct Pca2d {
  Matrix points;     // n x 2 projection onto the top two principal components
  bool degenerate = false;  // rank < 2: missing components padded with zeros
};

// Mean-centered projection via power iteration with deflation. Component
// signs fixed so each component's largest-magnitude coordinate is positive.
Pca2d pca_project_2d(const Matrix& points);

}  // namespace dtsc

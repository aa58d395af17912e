#include "dtsc/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "dtsc/rng.hpp"

namespace dtsc {

Matrix softmax_rows(const Matrix& m) {
  ensure_finite(m, "softmax_rows");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& m) {
  ensure_finite(m, "log_softmax_rows");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < in.size(); ++j) o[j] = in[j] - lse;
  }
  return out;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error("cosine_similarity: length mismatch");
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu <= kNormFloor || nv <= kNormFloor) {
    throw Error("cosine_similarity: norm at or below floor");
  }
  const double c = dot(u, v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg) {
  ensure_same_shape(params, grads, "adam_step");
  ensure_same_shape(params, state.m, "adam_step state");
  ensure_finite(grads, "adam_step gradients");
  if (cfg.lr <= 0.0) throw Error("adam_step: lr must be positive");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw Error("adam_step: betas must lie in [0, 1)");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto p = params.flat();
  auto g = grads.flat();
  auto m = state.m.flat();
  auto v = state.v.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& loss_fn,
                        const Matrix& params, double h) {
  if (h <= 0.0) throw Error("finite_diff_grad: h must be positive");
  Matrix grad(params.rows(), params.cols());
  Matrix work = params;
  auto w = work.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = w[i];
    w[i] = orig + h;
    const double up = loss_fn(work);
    w[i] = orig - h;
    const double down = loss_fn(work);
    w[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error("finite_diff_grad: non-finite loss evaluation");
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

constexpr int kPowerMaxIters = 1000;
constexpr double kPowerTol = 1e-10;

// Dominant eigenvector of symmetric cov. Returns eigenvalue, writes vector.
double power_iteration(const Matrix& cov, std::vector<double>& vec, Rng& rng) {
  const std::size_t d = cov.rows();
  vec.assign(d, 0.0);
  for (double& x : vec) x = rng.normal();
  double n = norm2(vec);
  for (double& x : vec) x /= n;

  std::vector<double> next(d, 0.0);
  for (int it = 0; it < kPowerMaxIters; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * vec[j];
      next[i] = s;
    }
    const double nn = norm2(next);
    if (nn <= kNormFloor) return 0.0;  // vector annihilated: zero spectrum left
    double delta = 0.0, delta_flip = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      next[i] /= nn;
      delta = std::max(delta, std::abs(next[i] - vec[i]));
      delta_flip = std::max(delta_flip, std::abs(next[i] + vec[i]));
    }
    vec = next;
    if (std::min(delta, delta_flip) < kPowerTol) break;
  }
  // Rayleigh quotient with the unit vector.
  double lambda = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += cov(i, j) * vec[j];
    lambda += vec[i] * s;
  }
  return lambda;
}

void fix_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  }
  if (v[arg] < 0.0) {
    for (double& x : v) x = -x;
  }
}

}  // namespace

Pca2d pca_project_2d(const Matrix& points) {
  ensure_finite(points, "pca_project_2d");
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n < 3) throw Error("pca_project_2d: need at least 3 points");
  if (d < 2) throw Error("pca_project_2d: need dimension >= 2");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += points(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = points(i, j) - mean[j];
  }

  Matrix cov = matmul_tn(centered, centered);
  for (double& v : cov.flat()) v /= static_cast<double>(n);

  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += cov(j, j);

  Pca2d result;
  result.points = Matrix(n, 2);
  const double scale = std::max(trace, 1.0);

  Rng rng(0x9ca2d5eedULL);  // fixed internal seed: projection is deterministic
  std::vector<double> v1;
  const double l1 = power_iteration(cov, v1, rng);
  if (l1 <= kNormFloor * scale) {
    result.degenerate = true;  // no variance at all; everything maps to (0, 0)
    return result;
  }
  fix_sign(v1);

  // Deflate and repeat for the second component.
  Matrix deflated = cov;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) deflated(i, j) -= l1 * v1[i] * v1[j];
  }
  std::vector<double> v2;
  const double l2 = power_iteration(deflated, v2, rng);
  const bool have_second = l2 > kNormFloor * scale;
  if (have_second) {
    fix_sign(v2);
  } else {
    result.degenerate = true;
    v2.assign(d, 0.0);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto r = centered.row(i);
    result.points(i, 0) = dot(r, v1);
    result.points(i, 1) = have_second ? dot(r, v2) : 0.0;
  }
  return result;
}

}  // namespace dtsc

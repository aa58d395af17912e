#include "dtsc/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "dtsc/numerics.hpp"

namespace dtsc {

ReferenceSamplePool::ReferenceSamplePool(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), data_(capacity * dim, 0.0) {
  if (capacity == 0 || dim == 0) throw Error("ReferenceSamplePool: zero capacity or dim");
}

void ReferenceSamplePool::enqueue(const Matrix& features) {
  if (features.cols() != dim_) {
    throw Error("ReferenceSamplePool::enqueue: dimension mismatch");
  }
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    if (norm2(row) <= kNormFloor) {
      ++skipped_;
      continue;
    }
    std::size_t pos;
    if (size_ < capacity_) {
      pos = (head_ + size_) % capacity_;
      ++size_;
    } else {
      pos = head_;  // overwrite the oldest slot
      head_ = (head_ + 1) % capacity_;
    }
    std::copy(row.begin(), row.end(), data_.begin() + pos * dim_);
    ++inserted_;
  }
}

std::span<const double> ReferenceSamplePool::slot(std::size_t k) const {
  if (k >= size_) throw Error("ReferenceSamplePool::slot: index out of range");
  const std::size_t pos = (head_ + k) % capacity_;
  return {data_.data() + pos * dim_, dim_};
}

Matrix ReferenceSamplePool::snapshot() const {
  Matrix out(size_, dim_);
  for (std::size_t k = 0; k < size_; ++k) {
    const auto s = slot(k);
    std::copy(s.begin(), s.end(), out.row(k).begin());
  }
  return out;
}

std::size_t ReferenceSamplePool::numerical_rank(double rel_tol) const {
  if (size_ == 0) return 0;
  const Matrix s = snapshot();
  // Gram matrix eigenvalues via Jacobi sweeps; K is small in diagnostics.
  Matrix g = matmul_nt(s, s);
  const std::size_t n = g.rows();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(g(p, q)) < 1e-18) continue;
        const double theta = 0.5 * std::atan2(2.0 * g(p, q), g(q, q) - g(p, p));
        const double c = std::cos(theta), sn = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          const double gpk = g(p, k), gqk = g(q, k);
          g(p, k) = c * gpk - sn * gqk;
          g(q, k) = sn * gpk + c * gqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double gkp = g(k, p), gkq = g(k, q);
          g(k, p) = c * gkp - sn * gkq;
          g(k, q) = sn * gkp + c * gkq;
        }
      }
    }
  }
  double max_ev = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_ev = std::max(max_ev, g(i, i));
  if (max_ev <= 0.0) return 0;
  std::size_t rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g(i, i) > rel_tol * max_ev) ++rank;
  }
  return rank;
}

std::vector<double> relative_location(std::span<const double> a,
                                      const ReferenceSamplePool& pool) {
  if (!pool.full()) {
    throw Error("relative_location: pool not full (warm-up incomplete)");
  }
  if (a.size() != pool.dim()) throw Error("relative_location: dimension mismatch");
  std::vector<double> r(pool.capacity());
  for (std::size_t k = 0; k < pool.capacity(); ++k) {
    r[k] = cosine_similarity(a, pool.slot(k));
  }
  return r;
}

Matrix relative_locations(const Matrix& features, const Matrix& slots) {
  if (features.cols() != slots.cols()) {
    throw Error("relative_locations: dimension mismatch");
  }
  Matrix r(features.rows(), slots.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t k = 0; k < slots.rows(); ++k) {
      r(i, k) = cosine_similarity(features.row(i), slots.row(k));
    }
  }
  return r;
}

AlcResult alc_loss(const Matrix& student_logits, const Matrix& teacher_logits) {
  ensure_same_shape(student_logits, teacher_logits, "alc_loss");
  const Matrix p = softmax_rows(student_logits);
  const Matrix q = softmax_rows(teacher_logits);
  const double denom = static_cast<double>(p.rows() * p.cols());

  AlcResult result;
  result.d_student_logits = Matrix(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto pi = p.row(i);
    const auto qi = q.row(i);
    double gp_dot_p = 0.0;
    std::vector<double> gp(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j) {
      const double diff = pi[j] - qi[j];
      result.value += diff * diff;
      gp[j] = 2.0 * diff / denom;
      gp_dot_p += gp[j] * pi[j];
    }
    auto d = result.d_student_logits.row(i);
    for (std::size_t j = 0; j < pi.size(); ++j) {
      d[j] = pi[j] * (gp[j] - gp_dot_p);
    }
  }
  result.value /= denom;
  return result;
}

double rlc_value(const Matrix& r_student, const Matrix& r_teacher) {
  ensure_same_shape(r_student, r_teacher, "rlc_value");
  double sum = 0.0;
  auto a = r_student.flat();
  auto b = r_teacher.flat();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

RlcResult rlc_loss(const Matrix& a_student, const Matrix& r_student, const Matrix& r_teacher,
                   const Matrix& slots) {
  ensure_same_shape(r_student, r_teacher, "rlc_loss");
  if (a_student.rows() != r_student.rows() || a_student.cols() != slots.cols() ||
      r_student.cols() != slots.rows()) {
    throw Error("rlc_loss: inconsistent shapes");
  }
  RlcResult result;
  result.value = rlc_value(r_student, r_teacher);
  result.d_features = Matrix(a_student.rows(), a_student.cols());

  const double denom = static_cast<double>(r_student.rows() * r_student.cols());
  for (std::size_t i = 0; i < a_student.rows(); ++i) {
    const auto a = a_student.row(i);
    const double na = norm2(a);
    if (na <= kNormFloor) throw Error("rlc_loss: zero-norm student feature");
    auto d = result.d_features.row(i);
    for (std::size_t k = 0; k < slots.rows(); ++k) {
      const auto s = slots.row(k);
      const double ns = norm2(s);
      if (ns <= kNormFloor) throw Error("rlc_loss: zero-norm pool slot");
      const double cos_ik = r_student(i, k);
      const double coeff = 2.0 * (cos_ik - r_teacher(i, k)) / denom;
      // d cos(a, s) / d a = s / (|a||s|) - cos * a / |a|^2
      for (std::size_t j = 0; j < a.size(); ++j) {
        d[j] += coeff * (s[j] / (na * ns) - cos_ik * a[j] / (na * na));
      }
    }
  }
  return result;
}

}  // namespace dtsc

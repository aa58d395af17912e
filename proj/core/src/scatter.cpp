#include "dtsc/scatter.hpp"

#include <algorithm>
#include <cmath>

#include "dtsc/numerics.hpp"

namespace dtsc {

MemoryBank::MemoryBank(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), data_(capacity * dim, 0.0) {
  if (capacity == 0 || dim == 0) throw Error("MemoryBank: zero capacity or dim");
}

void MemoryBank::enqueue(const Matrix& keys) {
  if (keys.cols() != dim_) throw Error("MemoryBank::enqueue: dimension mismatch");
  for (std::size_t i = 0; i < keys.rows(); ++i) {
    const auto row = keys.row(i);
    if (std::abs(norm2(row) - 1.0) > 1e-10) {
      throw Error("MemoryBank::enqueue: key is not unit-norm");
    }
    std::size_t pos;
    if (size_ < capacity_) {
      pos = (head_ + size_) % capacity_;
      ++size_;
    } else {
      pos = head_;
      head_ = (head_ + 1) % capacity_;
    }
    std::copy(row.begin(), row.end(), data_.begin() + pos * dim_);
    ++inserted_;
  }
}

std::span<const double> MemoryBank::slot(std::size_t k) const {
  if (k >= size_) throw Error("MemoryBank::slot: index out of range");
  const std::size_t pos = (head_ + k) % capacity_;
  return {data_.data() + pos * dim_, dim_};
}

Matrix MemoryBank::snapshot() const {
  Matrix out(size_, dim_);
  for (std::size_t k = 0; k < size_; ++k) {
    const auto s = slot(k);
    std::copy(s.begin(), s.end(), out.row(k).begin());
  }
  return out;
}

InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_pos,
                       const Matrix& bank_slots, double tau) {
  if (tau <= 0.0) throw Error("info_nce: tau must be positive");
  if (q.size() != k_pos.size() || bank_slots.cols() != q.size()) {
    throw Error("info_nce: dimension mismatch");
  }
  if (bank_slots.rows() == 0) throw Error("info_nce: empty bank");
  if (std::abs(norm2(q) - 1.0) > kUnitNormTol || std::abs(norm2(k_pos) - 1.0) > kUnitNormTol) {
    throw Error("info_nce: inputs must be unit-norm");
  }

  const std::size_t m = bank_slots.rows();
  std::vector<double> logits(m + 1);
  logits[0] = dot(q, k_pos) / tau;
  for (std::size_t j = 0; j < m; ++j) logits[j + 1] = dot(q, bank_slots.row(j)) / tau;

  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);

  InfoNceResult result;
  result.value = lse - logits[0];

  // softmax over {positive, negatives}; dL/dq = (1/tau) [ (p0 - 1) k+ + sum_j pj k_j ]
  result.d_q.assign(q.size(), 0.0);
  const double p0 = std::exp(logits[0] - lse);
  for (std::size_t t = 0; t < q.size(); ++t) result.d_q[t] = (p0 - 1.0) * k_pos[t] / tau;
  for (std::size_t j = 0; j < m; ++j) {
    const double pj = std::exp(logits[j + 1] - lse);
    const auto kj = bank_slots.row(j);
    for (std::size_t t = 0; t < q.size(); ++t) result.d_q[t] += pj * kj[t] / tau;
  }
  return result;
}

InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_pos,
                       const MemoryBank& bank, double tau) {
  if (bank.occupancy() == 0) throw Error("info_nce: empty bank");
  return info_nce(q, k_pos, bank.snapshot(), tau);
}

InfoNceBatch info_nce_batch(const Matrix& queries, const Matrix& positives,
                            const Matrix& bank_slots, double tau) {
  ensure_same_shape(queries, positives, "info_nce_batch");
  InfoNceBatch batch;
  batch.d_q = Matrix(queries.rows(), queries.cols());
  const double inv_b = 1.0 / static_cast<double>(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const InfoNceResult r = info_nce(queries.row(i), positives.row(i), bank_slots, tau);
    batch.value += r.value * inv_b;
    auto d = batch.d_q.row(i);
    for (std::size_t t = 0; t < d.size(); ++t) d[t] = r.d_q[t] * inv_b;
  }
  return batch;
}

double mean_pairwise_cosine(const Matrix& features) {
  const std::size_t n = features.rows();
  if (n < 2) throw Error("mean_pairwise_cosine: need at least 2 rows");
  Matrix unit = features;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = unit.row(i);
    const double nr = norm2(r);
    if (nr <= kNormFloor) throw Error("mean_pairwise_cosine: zero-norm row");
    for (double& v : r) v /= nr;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += std::clamp(dot(unit.row(i), unit.row(j)), -1.0, 1.0);
    }
  }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace dtsc

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtsc/matrix.hpp"

namespace dtsc {

inline constexpr double kUnitNormTol = 1e-8;

// Fixed-capacity FIFO of unit-norm key vectors supplying InfoNCE negatives.
class MemoryBank {
 public:
  MemoryBank(std::size_t capacity, std::size_t dim);

  void enqueue(const Matrix& keys);  // rows must be unit-norm within 1e-10
  std::size_t occupancy() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t inserted() const { return inserted_; }

  std::span<const double> slot(std::size_t k) const;  // 0 = oldest
  Matrix snapshot() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<double> data_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t inserted_ = 0;
};

struct InfoNceResult {
  double value = 0.0;
  std::vector<double> d_q;
};

// loss = -log( exp(q.k+ / tau) / (exp(q.k+ / tau) + sum_j exp(q.k_j / tau)) )
// via log-sum-exp; the positive key and bank entries are constants.
InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_pos,
                       const Matrix& bank_slots, double tau);
InfoNceResult info_nce(std::span<const double> q, std::span<const double> k_pos,
                       const MemoryBank& bank, double tau);

struct InfoNceBatch {
  double value = 0.0;  // mean of per-sample losses
  Matrix d_q;
};

InfoNceBatch info_nce_batch(const Matrix& queries, const Matrix& positives,
                            const Matrix& bank_slots, double tau);

// Mean cosine similarity over all unordered distinct row pairs.
double mean_pairwise_cosine(const Matrix& features);

}  // namespace dtsc

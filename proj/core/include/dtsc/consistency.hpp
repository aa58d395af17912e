#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtsc/matrix.hpp"

namespace dtsc {

// Fixed-capacity FIFO of absolute-location feature vectors. Entries are
// detached copies; once full it stays full, oldest evicted first. Vectors
// with norm at or below the floor are skipped and counted.
class ReferenceSamplePool {
 public:
  ReferenceSamplePool(std::size_t capacity, std::size_t dim);

  void enqueue(const Matrix& features);
  std::size_t occupancy() const { return size_; }
  bool full() const { return size_ == capacity_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t inserted() const { return inserted_; }
  std::size_t skipped_low_norm() const { return skipped_; }

  // Slot 0 is the oldest entry.
  std::span<const double> slot(std::size_t k) const;
  Matrix snapshot() const;  // occupancy x dim, oldest first

  // Numerical rank of the stored vectors (Gram-matrix eigenvalue count
  // above tolerance); diagnostic only.
  std::size_t numerical_rank(double rel_tol = 1e-10) const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<double> data_;
  std::size_t head_ = 0;  // physical index of the oldest entry
  std::size_t size_ = 0;
  std::size_t inserted_ = 0;
  std::size_t skipped_ = 0;
};

// R_k = cosine(a, slot_k) in pool order. The pool must be full.
std::vector<double> relative_location(std::span<const double> a,
                                      const ReferenceSamplePool& pool);

// Batch form against a pool snapshot (rows = slots).
Matrix relative_locations(const Matrix& features, const Matrix& slots);

struct AlcResult {
  double value = 0.0;
  Matrix d_student_logits;
};

// MSE between softmax rows of the two views, averaged over batch and
// classes; the teacher side is constant.
AlcResult alc_loss(const Matrix& student_logits, const Matrix& teacher_logits);

// Plain MSE between two relative-location matrices (batch x K).
double rlc_value(const Matrix& r_student, const Matrix& r_teacher);

struct RlcResult {
  double value = 0.0;
  Matrix d_features;  // gradient wrt the student's absolute locations
};

// r_student must be relative_locations(a_student, slots); pool slots and the
// teacher side are constants for the gradient.
RlcResult rlc_loss(const Matrix& a_student, const Matrix& r_student, const Matrix& r_teacher,
                   const Matrix& slots);

}  // namespace dtsc

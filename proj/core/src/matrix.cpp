#include "dtsc/matrix.hpp"

#include <cmath>
#include <utility>

namespace dtsc {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error("Matrix: data length " + std::to_string(data_.size()) +
                " does not match shape " + std::to_string(rows_) + "x" +
                std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw Error("Matrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ensure_finite(const Matrix& m, const std::string& context) {
  if (!m.all_finite()) throw Error(context + ": non-finite entries");
}

void ensure_same_shape(const Matrix& a, const Matrix& b, const std::string& context) {
  if (!a.same_shape(b)) {
    throw Error(context + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error("matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error("matmul_tn: row counts disagree");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error("matmul_nt: column counts disagree");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  ensure_same_shape(a, b, "operator+");
  Matrix out = a;
  auto o = out.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bb[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  ensure_same_shape(a, b, "operator-");
  Matrix out = a;
  auto o = out.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bb[i];
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out = m;
  for (double& v : out.flat()) v *= s;
  return out;
}

Matrix& operator+=(Matrix& a, const Matrix& b) {
  ensure_same_shape(a, b, "operator+=");
  auto aa = a.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < aa.size(); ++i) aa[i] += bb[i];
  return a;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  ensure_same_shape(a, b, "hadamard");
  Matrix out = a;
  auto o = out.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bb[i];
  return out;
}

Matrix col_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
  }
  return out;
}

void add_row_inplace(Matrix& m, const Matrix& row_vec) {
  if (row_vec.rows() != 1 || row_vec.cols() != m.cols()) {
    throw Error("add_row_inplace: expected 1x" + std::to_string(m.cols()) + " row vector");
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += row_vec(0, j);
  }
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace dtsc

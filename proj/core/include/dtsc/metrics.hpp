#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtsc/consistency.hpp"
#include "dtsc/matrix.hpp"

namespace dtsc {

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<int> support;                 // true count per class
  std::vector<std::optional<double>> auc;   // absent when undefined for a class
  std::optional<double> macro_auc;
};

// Accuracy plus one-vs-rest precision/recall/F1 with 0/0 -> 0 and unweighted
// macro averages. AUC fields are left empty.
MetricsReport classification_report(std::span<const int> predicted, std::span<const int> truth,
                                    int class_count);

struct AucResult {
  std::vector<std::optional<double>> per_class;
  std::optional<double> macro;
};

// One-vs-rest AUC per class from score columns: Mann-Whitney statistic with
// midrank tie handling, (wins + 0.5 ties) / (n_pos * n_neg). Classes missing
// positives or negatives are absent and excluded from the macro mean.
AucResult auc_ovr(const Matrix& scores, std::span<const int> truth);

// classification_report with AUC fields filled from scores.
MetricsReport full_report(std::span<const int> predicted, const Matrix& scores,
                          std::span<const int> truth, int class_count);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

// Two-sided paired t-test. All-zero differences give t = 0, p = 1; zero
// variance with nonzero mean gives t = +/-inf, p = 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b) by continued fraction; exposed for
// the distribution tests.
double regularized_incomplete_beta(double x, double a, double b);
double student_t_two_sided_p(double t, double dof);

// Entry (i, k) = cosine(batch_i, slot_k) over the first
// min(max_cols, occupancy) slots.
Matrix similarity_matrix(const Matrix& batch_features, const ReferenceSamplePool& pool,
                         std::size_t max_cols);

// Flat key/value serialization ("key value" per line).
std::string serialize_report(const MetricsReport& report);

}  // namespace dtsc

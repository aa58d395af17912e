#include "dtsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "dtsc/numerics.hpp"

namespace dtsc {

MetricsReport classification_report(std::span<const int> predicted, std::span<const int> truth,
                                    int class_count) {
  if (predicted.size() != truth.size()) {
    throw Error("classification_report: length mismatch");
  }
  if (predicted.empty()) throw Error("classification_report: empty input");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 ||
        predicted[i] >= class_count) {
      throw Error("classification_report: label outside [0, class_count)");
    }
  }

  MetricsReport rep;
  rep.precision.assign(class_count, 0.0);
  rep.recall.assign(class_count, 0.0);
  rep.f1.assign(class_count, 0.0);
  rep.support.assign(class_count, 0);

  std::vector<int> tp(class_count, 0), fp(class_count, 0), fn(class_count, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++rep.support[truth[i]];
    if (predicted[i] == truth[i]) {
      ++tp[truth[i]];
      ++correct;
    } else {
      ++fp[predicted[i]];
      ++fn[truth[i]];
    }
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  for (int k = 0; k < class_count; ++k) {
    const double p_den = tp[k] + fp[k];
    const double r_den = tp[k] + fn[k];
    rep.precision[k] = p_den > 0 ? tp[k] / p_den : 0.0;
    rep.recall[k] = r_den > 0 ? tp[k] / r_den : 0.0;
    const double pr = rep.precision[k] + rep.recall[k];
    rep.f1[k] = pr > 0 ? 2.0 * rep.precision[k] * rep.recall[k] / pr : 0.0;
    rep.macro_precision += rep.precision[k];
    rep.macro_recall += rep.recall[k];
    rep.macro_f1 += rep.f1[k];
  }
  rep.macro_precision /= class_count;
  rep.macro_recall /= class_count;
  rep.macro_f1 /= class_count;
  return rep;
}

AucResult auc_ovr(const Matrix& scores, std::span<const int> truth) {
  if (scores.rows() != truth.size()) throw Error("auc_ovr: length mismatch");
  const int class_count = static_cast<int>(scores.cols());
  const std::size_t n = truth.size();

  AucResult result;
  result.per_class.assign(class_count, std::nullopt);
  double macro_sum = 0.0;
  int macro_n = 0;

  std::vector<std::size_t> order(n);
  std::vector<double> ranks(n);
  for (int k = 0; k < class_count; ++k) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) n_pos += truth[i] == k;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) continue;  // AUC undefined for this class

    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores(a, k) < scores(b, k);
    });
    // Midranks over tied score runs.
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && scores(order[j + 1], k) == scores(order[i], k)) ++j;
      const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (truth[t] == k) rank_sum += ranks[t];
    }
    const double u = rank_sum - 0.5 * static_cast<double>(n_pos) *
                                    static_cast<double>(n_pos + 1);
    const double auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    result.per_class[k] = auc;
    macro_sum += auc;
    ++macro_n;
  }
  if (macro_n == 0) throw Error("auc_ovr: single-class input, no AUC defined");
  result.macro = macro_sum / macro_n;
  return result;
}

MetricsReport full_report(std::span<const int> predicted, const Matrix& scores,
                          std::span<const int> truth, int class_count) {
  MetricsReport rep = classification_report(predicted, truth, class_count);
  const AucResult auc = auc_ovr(scores, truth);
  rep.auc = auc.per_class;
  rep.macro_auc = auc.macro;
  return rep;
}

namespace {

// Lentz continued fraction for the incomplete beta tail.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr int max_terms = 100000;
  auto numer = [&](int n) -> double {
    if (n % 2 == 0) {
      const double m = n / 2;
      return m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    }
    const double m = (n - 1) / 2;
    return -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
  };
  double ret = 1.0;
  double c = ret;
  double d = 0.0;
  for (int n = 1; n < max_terms; ++n) {
    const double an = numer(n);
    d = 1.0 + an * d;
    if (d == 0.0) d = tiny;
    c = 1.0 + an / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double mult = c * d;
    ret *= mult;
    if (std::fabs(mult - 1.0) <= 1e-15) break;
  }
  return ret;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0 && a > 0.0 && b > 0.0)) {
    throw Error("regularized_incomplete_beta: arguments out of domain");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x <= (a + 1.0) / (a + b + 2.0)) {
    return front / (a * beta_continued_fraction(x, a, b));
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(a, b)) /
                   (b * beta_continued_fraction(1.0 - x, b, a));
}

double student_t_two_sided_p(double t, double dof) {
  if (dof <= 0.0) throw Error("student_t_two_sided_p: dof must be positive");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return regularized_incomplete_beta(dof / (t * t + dof), 0.5 * dof, 0.5);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired_t_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw Error("paired_t_test: need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult result;
  if (sd == 0.0) {
    if (mean == 0.0) {
      result.t = 0.0;
      result.p = 1.0;
    } else {
      result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      result.p = 0.0;
    }
    return result;
  }
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p = student_t_two_sided_p(result.t, static_cast<double>(n - 1));
  return result;
}

Matrix similarity_matrix(const Matrix& batch_features, const ReferenceSamplePool& pool,
                         std::size_t max_cols) {
  if (pool.occupancy() == 0) throw Error("similarity_matrix: empty pool");
  const std::size_t cols = std::min(max_cols, pool.occupancy());
  Matrix out(batch_features.rows(), cols);
  for (std::size_t i = 0; i < batch_features.rows(); ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      out(i, k) = cosine_similarity(batch_features.row(i), pool.slot(k));
    }
  }
  return out;
}

std::string serialize_report(const MetricsReport& report) {
  std::ostringstream out;
  char buf[32];
  auto emit = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << key << " " << buf << "\n";
  };
  emit("accuracy", report.accuracy);
  emit("macro_precision", report.macro_precision);
  emit("macro_recall", report.macro_recall);
  emit("macro_f1", report.macro_f1);
  if (report.macro_auc) emit("macro_auc", *report.macro_auc);
  for (std::size_t k = 0; k < report.precision.size(); ++k) {
    const std::string suffix = "_class_" + std::to_string(k);
    emit("precision" + suffix, report.precision[k]);
    emit("recall" + suffix, report.recall[k]);
    emit("f1" + suffix, report.f1[k]);
    if (k < report.auc.size() && report.auc[k]) emit("auc" + suffix, *report.auc[k]);
    out << "support" << suffix << " " << report.support[k] << "\n";
  }
  return out.str();
}

}  // namespace dtsc

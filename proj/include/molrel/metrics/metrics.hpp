#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace molrel::metrics {

// A metric that cannot be computed (zero variance, one-class input) is an
// explicit "undefined" marker, never NaN, so reports stay machine-diffable.
struct MetricValue {
  double value = 0.0;
  bool defined = true;

  static MetricValue undefined() { return {0.0, false}; }
};

using Report = std::vector<std::pair<std::string, MetricValue>>;

// Keys in order: mse, rmse, mae, r2, pcc, spearman.
Report regression_report(const std::vector<double>& preds, const std::vector<double>& targets);

// Keys in order: auc_roc, pr_auc, range_logauc, accuracy, precision, recall, f1.
// Scores must lie in [0, 1]; labels in {0, 1}.
Report classification_report(const std::vector<double>& scores, const std::vector<int>& labels,
                             double threshold = 0.5);

// Range LogAUC window, TDC convention.
inline constexpr double kRangeLogAucLow = 1e-3;
inline constexpr double kRangeLogAucHigh = 1e-1;

// Flat "key value" lines, stable key order; undefined prints as "undefined".
std::string format_report(const Report& report);

MetricValue report_value(const Report& report, const std::string& key);

// Average ranks with ties sharing their mean rank (1-based).
std::vector<double> average_ranks(const std::vector<double>& values);

}  // namespace molrel::metrics

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "molrel/core/error.hpp"
#include "molrel/metrics/metrics.hpp"

namespace molrel::metrics {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MetricValue pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = mean_of(a), mb = mean_of(b);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return MetricValue::undefined();
  return {sab / std::sqrt(saa * sbb), true};
}

// ROC points (fpr, tpr), threshold descending, tie groups collapsed, starting
// at (0, 0) and ending at (1, 1).
std::vector<std::pair<double, double>> roc_points(const std::vector<double>& scores,
                                                  const std::vector<int>& labels, int npos,
                                                  int nneg) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return scores[i] > scores[j]; });
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) ++tp;
      else ++fp;
      ++j;
    }
    pts.emplace_back(static_cast<double>(fp) / nneg, static_cast<double>(tp) / npos);
    i = j;
  }
  return pts;
}

double interp_tpr(const std::vector<std::pair<double, double>>& pts, double fpr) {
  for (size_t k = 1; k < pts.size(); ++k) {
    if (fpr <= pts[k].first) {
      double f0 = pts[k - 1].first, t0 = pts[k - 1].second;
      double f1 = pts[k].first, t1 = pts[k].second;
      if (f1 == f0) return t1;
      return t0 + (t1 - t0) * (fpr - f0) / (f1 - f0);
    }
  }
  return pts.back().second;
}

// Area under the ROC curve for FPR in the window, on a log10(FPR) axis,
// normalized by the log-range.
double range_logauc(const std::vector<std::pair<double, double>>& pts) {
  const double lo = kRangeLogAucLow, hi = kRangeLogAucHigh;
  std::vector<std::pair<double, double>> window{{lo, interp_tpr(pts, lo)}};
  for (const auto& [f, t] : pts)
    if (f > lo && f < hi) window.emplace_back(f, t);
  window.emplace_back(hi, interp_tpr(pts, hi));
  double area = 0.0;
  for (size_t k = 1; k < window.size(); ++k) {
    double dx = std::log10(window[k].first) - std::log10(window[k - 1].first);
    area += 0.5 * (window[k].second + window[k - 1].second) * dx;
  }
  return area / (std::log10(hi) - std::log10(lo));
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

Report regression_report(const std::vector<double>& preds, const std::vector<double>& targets) {
  if (preds.empty()) fail_validation("regression_report: empty input");
  if (preds.size() != targets.size())
    fail_validation("regression_report: length mismatch ", preds.size(), " vs ", targets.size());
  for (double v : preds)
    if (!std::isfinite(v)) fail_validation("regression_report: non-finite prediction");
  for (double v : targets)
    if (!std::isfinite(v)) fail_validation("regression_report: non-finite target");

  const auto n = static_cast<double>(preds.size());
  double mse = 0, mae = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    double d = preds[i] - targets[i];
    mse += d * d;
    mae += std::abs(d);
  }
  mse /= n;
  mae /= n;

  double tmean = mean_of(targets);
  double ss_res = mse * n;
  double ss_tot = 0;
  for (double t : targets) ss_tot += (t - tmean) * (t - tmean);
  MetricValue r2 = ss_tot == 0.0 ? MetricValue::undefined()
                                 : MetricValue{1.0 - ss_res / ss_tot, true};
  MetricValue pcc = pearson(preds, targets);
  MetricValue spearman = pearson(average_ranks(preds), average_ranks(targets));

  return {{"mse", {mse, true}},  {"rmse", {std::sqrt(mse), true}}, {"mae", {mae, true}},
          {"r2", r2},            {"pcc", pcc},                     {"spearman", spearman}};
}

Report classification_report(const std::vector<double>& scores, const std::vector<int>& labels,
                             double threshold) {
  if (scores.empty()) fail_validation("classification_report: empty input");
  if (scores.size() != labels.size())
    fail_validation("classification_report: length mismatch ", scores.size(), " vs ",
                    labels.size());
  int npos = 0, nneg = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0.0 || scores[i] > 1.0 || !std::isfinite(scores[i]))
      fail_validation("classification_report: score ", scores[i], " outside [0,1]");
    if (labels[i] != 0 && labels[i] != 1)
      fail_validation("classification_report: label must be 0 or 1, got ", labels[i]);
    labels[i] == 1 ? ++npos : ++nneg;
  }

  MetricValue auc = MetricValue::undefined();
  MetricValue pr_auc = MetricValue::undefined();
  MetricValue rlauc = MetricValue::undefined();
  if (npos > 0 && nneg > 0) {
    // Rank statistic; tied pairs count one half.
    std::vector<double> ranks = average_ranks(scores);
    double pos_rank_sum = 0;
    for (size_t i = 0; i < scores.size(); ++i)
      if (labels[i] == 1) pos_rank_sum += ranks[i];
    double npos_d = npos, nneg_d = nneg;
    auc = {(pos_rank_sum - npos_d * (npos_d + 1) / 2.0) / (npos_d * nneg_d), true};

    // Average precision with step interpolation; tie groups move atomically.
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return scores[i] > scores[j]; });
    double ap = 0.0;
    int tp = 0, seen = 0;
    double prev_recall = 0.0;
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j < order.size() && scores[order[j]] == scores[order[i]]) {
        if (labels[order[j]] == 1) ++tp;
        ++seen;
        ++j;
      }
      double recall = static_cast<double>(tp) / npos_d;
      double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += (recall - prev_recall) * precision;
      prev_recall = recall;
      i = j;
    }
    pr_auc = {ap, true};
    rlauc = {range_logauc(roc_points(scores, labels, npos, nneg)), true};
  }

  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] >= threshold;
    if (pred && labels[i] == 1) ++tp;
    else if (pred && labels[i] == 0) ++fp;
    else if (!pred && labels[i] == 0) ++tn;
    else ++fn;
  }
  MetricValue accuracy{static_cast<double>(tp + tn) / static_cast<double>(scores.size()), true};
  MetricValue precision = tp + fp == 0 ? MetricValue::undefined()
                                       : MetricValue{static_cast<double>(tp) / (tp + fp), true};
  MetricValue recall = npos == 0 ? MetricValue::undefined()
                                 : MetricValue{static_cast<double>(tp) / npos, true};
  MetricValue f1 = MetricValue::undefined();
  if (precision.defined && recall.defined) {
    double p = precision.value, r = recall.value;
    f1 = {p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r), true};
  }

  return {{"auc_roc", auc},       {"pr_auc", pr_auc},   {"range_logauc", rlauc},
          {"accuracy", accuracy}, {"precision", precision}, {"recall", recall}, {"f1", f1}};
}

std::string format_report(const Report& report) {
  std::ostringstream out;
  out.precision(10);
  for (const auto& [key, mv] : report) {
    out << key << " ";
    if (mv.defined) out << mv.value;
    else out << "undefined";
    out << "\n";
  }
  return out.str();
}

MetricValue report_value(const Report& report, const std::string& key) {
  for (const auto& [k, v] : report)
    if (k == key) return v;
  fail_runtime("report_value: no key '", key, "'");
}

}  // namespace molrel::metrics

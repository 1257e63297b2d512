#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace mimgan {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(std::span<const int> truth,
                                 std::span<const int> predicted,
                                 int positive_class) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw std::invalid_argument("confusion: labels must be 0 or 1");
    const bool t = truth[i] == positive_class;
    const bool p = predicted[i] == positive_class;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (t && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct PointMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // 0/0 cases return 0 and raise the matching flag instead of NaN, so
  // reports stay machine-comparable.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

inline PointMetrics point_metrics(const ConfusionCounts& c) {
  PointMetrics m;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = tp / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = tp / static_cast<double>(c.tp + c.fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1_degenerate = true;
  } else {
    m.f1 = 2.0 * m.recall * m.precision / (m.recall + m.precision);
  }
  m.accuracy = c.total() == 0
                   ? 1.0
                   : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1)
  double auc = 0.0;
};

// Threshold sweep over the unique scores in descending order, trapezoidal
// area. Tied scores move as one block, which makes the area equal to the
// Mann-Whitney statistic with ties counted one half.
inline RocResult roc_auc(std::span<const double> scores,
                         std::span<const int> truth, int positive_class) {
  if (scores.size() != truth.size())
    throw std::invalid_argument("roc_auc: length mismatch");
  std::int64_t n_pos = 0, n_neg = 0;
  for (const int t : truth) {
    if (t != 0 && t != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    (t == positive_class ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: need at least one of each class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocResult r;
  r.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  double auc = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::int64_t block_tp = 0, block_fp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (truth[order[i]] == positive_class ? block_tp : block_fp)++;
      ++i;
    }
    const double prev_tpr = static_cast<double>(tp) / n_pos;
    const double prev_fpr = static_cast<double>(fp) / n_neg;
    tp += block_tp;
    fp += block_fp;
    const double tpr = static_cast<double>(tp) / n_pos;
    const double fpr = static_cast<double>(fp) / n_neg;
    auc += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    r.points.push_back({fpr, tpr, s});
  }
  r.auc = auc;
  return r;
}

struct EvalReport {
  // Convention A: anomaly (label 1) is the positive class.
  // Convention B: normal (label 0) is the positive class.
  ConfusionCounts counts_anomaly_positive;
  ConfusionCounts counts_normal_positive;
  PointMetrics metrics_anomaly_positive;
  PointMetrics metrics_normal_positive;
  RocResult roc;  // anomaly as positive

  static EvalReport from_predictions(std::span<const double> scores,
                                     std::span<const int> truth,
                                     std::span<const int> predicted) {
    EvalReport r;
    r.counts_anomaly_positive = confusion(truth, predicted, 1);
    r.counts_normal_positive = confusion(truth, predicted, 0);
    r.metrics_anomaly_positive = point_metrics(r.counts_anomaly_positive);
    r.metrics_normal_positive = point_metrics(r.counts_normal_positive);
    r.roc = roc_auc(scores, truth, 1);
    return r;
  }

  nlohmann::json to_json() const {
    const auto counts_json = [](const ConfusionCounts& c) {
      return nlohmann::json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    };
    const auto metrics_json = [](const PointMetrics& m) {
      return nlohmann::json{{"precision", m.precision},
                            {"recall", m.recall},
                            {"f1", m.f1},
                            {"accuracy", m.accuracy},
                            {"precision_degenerate", m.precision_degenerate},
                            {"recall_degenerate", m.recall_degenerate},
                            {"f1_degenerate", m.f1_degenerate}};
    };
    nlohmann::json j;
    j["anomaly_positive"] = {{"counts", counts_json(counts_anomaly_positive)},
                             {"metrics", metrics_json(metrics_anomaly_positive)}};
    j["normal_positive"] = {{"counts", counts_json(counts_normal_positive)},
                            {"metrics", metrics_json(metrics_normal_positive)}};
    j["auc"] = roc.auc;
    return j;
  }
};

}  // namespace mimgan

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "lsds/error.hpp"

namespace lsds {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// A metric whose denominator is zero is reported as 0 and flagged.
struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

inline ClassificationReport classification_report(const ConfusionCounts& c) {
  ClassificationReport r;
  r.counts = c;
  const double n = static_cast<double>(c.total());
  if (c.total() == 0) throw DomainError("classification metrics need at least one sample");
  r.accuracy = static_cast<double>(c.tp + c.tn) / n;
  if (c.tp + c.fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (r.precision + r.recall == 0.0) {
    r.f1_undefined = true;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

inline ClassificationReport classification_metrics(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw DomainError("labels and predictions differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) throw DomainError("labels and predictions must be 0 or 1");
    if (y == 1) {
      (p == 1 ? c.tp : c.fn)++;
    } else {
      (p == 1 ? c.fp : c.tn)++;
    }
  }
  return classification_report(c);
}

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  bool r2_undefined = false;  // constant truth
  std::size_t count = 0;
};

inline RegressionReport regression_metrics(std::span<const double> truth, std::span<const double> predictions) {
  if (truth.size() != predictions.size()) throw DomainError("truth and predictions differ in length");
  if (truth.empty()) throw DomainError("regression metrics need at least one sample");
  const double n = static_cast<double>(truth.size());
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= n;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - predictions[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    tot += (truth[i] - mean) * (truth[i] - mean);
  }
  RegressionReport r;
  r.count = truth.size();
  r.mae = abs_sum / n;
  // Rounding can leave the root an ulp below the mean absolute error.
  r.rmse = std::max(std::sqrt(sq_sum / n), r.mae);
  if (tot == 0.0) {
    r.r2_undefined = true;
  } else {
    r.r2 = 1.0 - sq_sum / tot;
  }
  return r;
}

}  // namespace lsds

#pragma once

// Cross-validation split plans and the runner that trains and scores a model
// per split.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsds/dataset.hpp"
#include "lsds/error.hpp"
#include "lsds/eval/metrics.hpp"
#include "lsds/parallel.hpp"
#include "lsds/rng.hpp"

namespace lsds {

enum class SplitKind { StratifiedKFold, LeaveOneObjectOut };

inline std::string_view to_string(SplitKind k) {
  return k == SplitKind::StratifiedKFold ? "stratified-k-fold" : "leave-one-object-out";
}

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
  std::string name;                // fold number or held-out object
};

struct SplitPlan {
  SplitKind kind = SplitKind::StratifiedKFold;
  std::uint64_t seed = 0;
  std::vector<Split> splits;
  std::vector<std::string> warnings;

  friend bool operator==(const SplitPlan& a, const SplitPlan& b) {
    if (a.kind != b.kind || a.seed != b.seed || a.splits.size() != b.splits.size()) return false;
    for (std::size_t i = 0; i < a.splits.size(); ++i) {
      if (a.splits[i].train != b.splits[i].train || a.splits[i].test != b.splits[i].test) return false;
    }
    return true;
  }
};

namespace detail {

inline Split complement_split(std::vector<std::size_t> test, std::size_t n, std::string name) {
  std::sort(test.begin(), test.end());
  Split s;
  s.name = std::move(name);
  s.train.reserve(n - test.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < test.size() && test[k] == i) {
      ++k;
    } else {
      s.train.push_back(i);
    }
  }
  s.test = std::move(test);
  return s;
}

}  // namespace detail

// Each class is shuffled under `seed` and dealt round-robin over the folds.
// The deal continues where the previous class stopped, so fold sizes differ by
// at most one and every fold's class count is within one of n_class / k.
inline SplitPlan stratified_kfold(std::span<const int> labels, std::size_t k = 5, std::uint64_t seed = 0) {
  if (k < 2) throw SplitError("k-fold needs k >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.empty()) throw SplitError("no samples to split");
  for (const auto& [label, ids] : by_class) {
    if (ids.size() < k) {
      throw SplitError("class " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                       " samples, fewer than k=" + std::to_string(k));
    }
  }
  std::vector<std::vector<std::size_t>> folds(k);
  Rng rng(derive_seed(seed, 0xf01d));
  std::size_t next = 0;
  for (auto& [label, ids] : by_class) {
    shuffle(std::span<std::size_t>(ids), rng);
    for (std::size_t id : ids) {
      folds[next].push_back(id);
      next = (next + 1) % k;
    }
  }
  SplitPlan plan;
  plan.kind = SplitKind::StratifiedKFold;
  plan.seed = seed;
  for (std::size_t f = 0; f < k; ++f) {
    plan.splits.push_back(detail::complement_split(std::move(folds[f]), labels.size(), "fold" + std::to_string(f + 1)));
  }
  return plan;
}

inline SplitPlan stratified_kfold(std::span<const DetectionSample> samples, std::size_t k = 5, std::uint64_t seed = 0) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return stratified_kfold(std::span<const int>(labels), k, seed);
}

// One split per object, in the order given by `objects` (or order of first
// appearance when empty). Listed objects without samples are skipped with a
// warning.
inline SplitPlan leave_one_object_out(std::span<const std::string> object_ids,
                                      const std::vector<std::string>& objects = {}) {
  std::vector<std::string> order = objects;
  std::map<std::string, std::vector<std::size_t>> by_object;
  for (std::size_t i = 0; i < object_ids.size(); ++i) {
    auto [it, inserted] = by_object.try_emplace(object_ids[i]);
    it->second.push_back(i);
    if (inserted && objects.empty()) order.push_back(object_ids[i]);
  }
  if (by_object.size() < 2) throw SplitError("leave-one-object-out needs at least two objects");
  SplitPlan plan;
  plan.kind = SplitKind::LeaveOneObjectOut;
  for (const auto& name : order) {
    auto it = by_object.find(name);
    if (it == by_object.end()) {
      plan.warnings.push_back("object '" + name + "' has no samples; skipped");
      continue;
    }
    plan.splits.push_back(detail::complement_split(std::move(it->second), object_ids.size(), name));
    by_object.erase(it);
  }
  for (auto& [name, ids] : by_object) {
    plan.warnings.push_back("object '" + name + "' is not in the object list; never held out");
  }
  return plan;
}

template <typename Sample>
SplitPlan leave_one_object_out(std::span<const Sample> samples, const std::vector<std::string>& objects = {}) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.object_id);
  return leave_one_object_out(std::span<const std::string>(ids), objects);
}

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> ids) {
  std::vector<T> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) {
    if (i >= items.size()) throw SplitError("split index " + std::to_string(i) + " out of range");
    out.push_back(items[i]);
  }
  return out;
}

template <typename Report>
struct CvResult {
  std::vector<std::string> split_names;
  std::vector<Report> splits;
  Report mean;
};

inline ClassificationReport mean_report(std::span<const ClassificationReport> rs) {
  if (rs.empty()) throw DomainError("no reports to average");
  ClassificationReport m;
  const double n = static_cast<double>(rs.size());
  for (const auto& r : rs) {
    m.accuracy += r.accuracy / n;
    m.precision += r.precision / n;
    m.recall += r.recall / n;
    m.f1 += r.f1 / n;
    m.counts.tp += r.counts.tp;
    m.counts.tn += r.counts.tn;
    m.counts.fp += r.counts.fp;
    m.counts.fn += r.counts.fn;
    m.precision_undefined |= r.precision_undefined;
    m.recall_undefined |= r.recall_undefined;
    m.f1_undefined |= r.f1_undefined;
  }
  return m;
}

inline RegressionReport mean_report(std::span<const RegressionReport> rs) {
  if (rs.empty()) throw DomainError("no reports to average");
  RegressionReport m;
  double mae = 0.0, rmse = 0.0, r2 = 0.0;
  for (const auto& r : rs) {
    mae += r.mae;
    rmse += r.rmse;
    r2 += r.r2;
    m.count += r.count;
    m.r2_undefined |= r.r2_undefined;
  }
  const double n = static_cast<double>(rs.size());
  m.mae = mae / n;
  m.rmse = rmse / n;
  m.r2 = r2 / n;
  return m;
}

// Runs `evaluate(split)` for every split (up to `jobs` at a time) and averages
// the reports without weighting. Failures are rethrown naming the split.
template <typename Report, typename Evaluate>
CvResult<Report> run_cv(const SplitPlan& plan, Evaluate&& evaluate, std::size_t jobs = 1) {
  if (plan.splits.empty()) throw SplitError("split plan is empty");
  CvResult<Report> out;
  out.splits.resize(plan.splits.size());
  parallel_for(plan.splits.size(), jobs, [&](std::size_t i) {
    try {
      out.splits[i] = evaluate(plan.splits[i]);
    } catch (const std::exception& e) {
      throw TrainingError("split " + std::to_string(i) + " (" + plan.splits[i].name + "): " + e.what());
    }
  });
  for (const auto& s : plan.splits) out.split_names.push_back(s.name);
  out.mean = mean_report(std::span<const Report>(out.splits));
  return out;
}

// Delimited report rows: model, feature set, split, metrics.
inline void write_report_header(std::ostream& os, const ClassificationReport*) {
  os << "model,feature_set,split,accuracy,precision,recall,f1,tp,tn,fp,fn\n";
}
inline void write_report_header(std::ostream& os, const RegressionReport*) {
  os << "model,feature_set,split,mae,rmse,r2,n\n";
}

namespace detail {
inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace detail

inline void write_report_row(std::ostream& os, std::string_view model, std::string_view set, std::string_view split,
                             const ClassificationReport& r) {
  os << model << ',' << set << ',' << split << ',' << detail::fixed(r.accuracy) << ',' << detail::fixed(r.precision)
     << ',' << detail::fixed(r.recall) << ',' << detail::fixed(r.f1) << ',' << r.counts.tp << ',' << r.counts.tn
     << ',' << r.counts.fp << ',' << r.counts.fn << '\n';
}

inline void write_report_row(std::ostream& os, std::string_view model, std::string_view set, std::string_view split,
                             const RegressionReport& r) {
  os << model << ',' << set << ',' << split << ',' << detail::fixed(r.mae) << ',' << detail::fixed(r.rmse) << ','
     << detail::fixed(r.r2) << ',' << r.count << '\n';
}

}  // namespace lsds

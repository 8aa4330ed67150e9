#pragma once

// Temporal splits, sale-state stratified metrics, subgroup gains, permutation
// importance, residual analytics and binary classification metrics.

#include "artval/core.hpp"
#include "artval/csv.hpp"
#include "artval/panel.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace artval::eval {

// Inclusive year interval, written "A:B" on the command line.
struct YearRange {
  int first = 0;
  int last = 0;

  bool contains(int y) const { return y >= first && y <= last; }
  bool overlaps(const YearRange& o) const { return first <= o.last && o.first <= last; }
  std::string str() const { return std::to_string(first) + ":" + std::to_string(last); }

  static YearRange parse(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
      fail(ErrorKind::invalid_argument, "year range '" + s + "' must look like A:B");
    YearRange r{static_cast<int>(csv::parse_int(s.substr(0, colon), "year range")),
                static_cast<int>(csv::parse_int(s.substr(colon + 1), "year range"))};
    if (r.first > r.last) fail(ErrorKind::invalid_argument, "year range '" + s + "' is empty");
    return r;
  }
};

struct Split {
  std::vector<panel::PanelRow> train;
  std::vector<panel::PanelRow> test;
};

// Rows outside both ranges are dropped; the ranges must not overlap.
inline Split temporal_split(const std::vector<panel::PanelRow>& rows, const YearRange& train,
                            const YearRange& test) {
  if (train.overlaps(test)) fail(ErrorKind::invalid_argument, "temporal_split: train and test years overlap");
  Split s;
  for (const auto& r : rows) {
    if (train.contains(r.sale_year)) s.train.push_back(r);
    else if (test.contains(r.sale_year)) s.test.push_back(r);
  }
  if (s.train.empty()) fail(ErrorKind::data, "temporal_split: no rows in training years " + train.str());
  if (s.test.empty()) fail(ErrorKind::data, "temporal_split: no rows in test years " + test.str());
  return s;
}

inline std::vector<panel::PanelRow> sold_only(const std::vector<panel::PanelRow>& rows) {
  std::vector<panel::PanelRow> out;
  for (const auto& r : rows)
    if (r.sold) out.push_back(r);
  return out;
}

inline Vector log_prices(const std::vector<panel::PanelRow>& rows) {
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].sold) fail(ErrorKind::data, "log_prices: row " + rows[i].lot_id + " is unsold");
    y(static_cast<Eigen::Index>(i)) = rows[i].log_price;
  }
  return y;
}

// Realized log price minus log midpoint estimate.
inline Vector estimation_error_target(const std::vector<panel::PanelRow>& rows) {
  Vector t(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto mid = panel::estimate_mid(r);
    if (!r.sold || !mid) fail(ErrorKind::data, "estimation_error_target: row " + r.lot_id + " lacks price or estimates");
    t(static_cast<Eigen::Index>(i)) = std::log(*r.price) - std::log(*mid);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Point metrics. All take log-scale inputs except mape_raw.

inline void check_pair(const Vector& y, const Vector& p, const char* what) {
  require(y.size() > 0, ErrorKind::invalid_argument, std::string(what) + ": empty input");
  require(y.size() == p.size(), ErrorKind::invalid_argument, std::string(what) + ": length mismatch");
}

inline double sse(const Vector& y, const Vector& p) { return (y - p).squaredNorm(); }

// 1 - SSE/SST with SST about the mean of the evaluated sample.
inline double r2_log(const Vector& y, const Vector& p) {
  check_pair(y, p, "r2");
  const double sst = (y.array() - y.mean()).square().sum();
  const double e = sse(y, p);
  if (sst == 0) return e == 0 ? 1.0 : 0.0;
  return 1.0 - e / sst;
}

// Percent error of log prices: 100 * mean |yhat - y| / |y|.
inline double mape(const Vector& y, const Vector& p) {
  check_pair(y, p, "mape");
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(y(i) != 0, ErrorKind::data, "mape: zero log price");
    s += std::abs(p(i) - y(i)) / std::abs(y(i));
  }
  return 100.0 * s / static_cast<double>(y.size());
}

// Percent error on the price scale, from log inputs.
inline double mape_raw(const Vector& y, const Vector& p) {
  check_pair(y, p, "mape_raw");
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += std::abs(std::exp(p(i) - y(i)) - 1.0);
  return 100.0 * s / static_cast<double>(y.size());
}

inline double mae_log(const Vector& y, const Vector& p) {
  check_pair(y, p, "mae");
  return (y - p).cwiseAbs().mean();
}

inline double mse(const Vector& y, const Vector& p) {
  check_pair(y, p, "mse");
  return sse(y, p) / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Stratified report

struct StratumMetrics {
  std::size_t n = 0;
  bool empty = true;
  double r2 = 0, mape_pct = 0, mape_raw_pct = 0, mae_log = 0, sse = 0;
};

struct EvalReport {
  std::string model;
  std::string target = "price";
  StratumMetrics all, previous, fresh;
  Vector residuals;  // y - yhat, log scale, test-row order

  static StratumMetrics metrics(const Vector& y, const Vector& p, bool log_price_target) {
    StratumMetrics m;
    m.n = static_cast<std::size_t>(y.size());
    if (m.n == 0) return m;
    m.empty = false;
    m.r2 = r2_log(y, p);
    m.mae_log = mae_log(y, p);
    m.sse = eval::sse(y, p);
    if (log_price_target) {
      m.mape_pct = mape(y, p);
      m.mape_raw_pct = mape_raw(y, p);
    }
    return m;
  }

  nlohmann::json to_json() const {
    auto stratum = [&](const StratumMetrics& m) {
      nlohmann::json j = {{"n", m.n}, {"empty", m.empty}};
      if (!m.empty) {
        j["r2"] = m.r2;
        j["mae_log"] = m.mae_log;
        if (target == "price") {
          j["mape_pct"] = m.mape_pct;
          j["mape_raw_pct"] = m.mape_raw_pct;
        }
      }
      return j;
    };
    return {{"model", model}, {"target", target},
            {"all", stratum(all)}, {"previous", stratum(previous)}, {"fresh", stratum(fresh)}};
  }

  // One line per model, columns in the order All / Previous / Fresh.
  static std::vector<std::string> csv_header() {
    return {"model",    "target",       "n_all",    "n_previous",  "n_fresh",   "r2_all",
            "r2_previous", "r2_fresh",  "mape_all", "mape_previous", "mape_fresh", "mape_raw_all",
            "mae_log_all"};
  }
  std::vector<std::string> csv_row() const {
    auto num = [](const StratumMetrics& m, double v) { return m.empty ? std::string() : csv::format_fixed(v, 6); };
    return {model,
            target,
            std::to_string(all.n),
            std::to_string(previous.n),
            std::to_string(fresh.n),
            num(all, all.r2),
            num(previous, previous.r2),
            num(fresh, fresh.r2),
            num(all, all.mape_pct),
            num(previous, previous.mape_pct),
            num(fresh, fresh.mape_pct),
            num(all, all.mape_raw_pct),
            num(all, all.mae_log)};
  }
};

inline EvalReport stratified_report(const std::string& model, const Vector& y, const Vector& p,
                                    const std::vector<bool>& is_fresh, const std::string& target = "price") {
  check_pair(y, p, "stratified_report");
  require(static_cast<Eigen::Index>(is_fresh.size()) == y.size(), ErrorKind::invalid_argument,
          "stratified_report: state flags length mismatch");
  std::vector<std::size_t> prev_idx, fresh_idx;
  for (std::size_t i = 0; i < is_fresh.size(); ++i) (is_fresh[i] ? fresh_idx : prev_idx).push_back(i);
  const bool logp = target == "price";
  EvalReport r;
  r.model = model;
  r.target = target;
  r.all = EvalReport::metrics(y, p, logp);
  r.previous = EvalReport::metrics(gather(y, prev_idx), gather(p, prev_idx), logp);
  r.fresh = EvalReport::metrics(gather(y, fresh_idx), gather(p, fresh_idx), logp);
  r.residuals = y - p;
  return r;
}

inline std::vector<bool> fresh_flags(const std::vector<panel::PanelRow>& rows) {
  std::vector<bool> f;
  f.reserve(rows.size());
  for (const auto& r : rows) f.push_back(r.is_fresh);
  return f;
}

// ---------------------------------------------------------------------------
// Subgroup relative MAE gain (MAE_tab - MAE_img) / MAE_tab with a percentile
// bootstrap interval.

struct SubgroupGain {
  std::string group;
  std::size_t n = 0;
  double mae_tab = 0, mae_img = 0, gain = 0;
  double ci_low = 0, ci_high = 0;
  bool low_confidence = false;
};

struct SubgroupOptions {
  int n_boot = 500;
  std::uint64_t seed = 0;
  std::size_t min_n = 30;
  double max_ci_width = 0.2;
};

inline double relative_gain(double mae_tab, double mae_img) {
  return mae_tab > 0 ? (mae_tab - mae_img) / mae_tab : 0.0;
}

inline std::vector<SubgroupGain> subgroup_gain(const Vector& abs_err_tab, const Vector& abs_err_img,
                                               const std::vector<std::string>& groups,
                                               const SubgroupOptions& opt = {}) {
  require(abs_err_tab.size() == abs_err_img.size() &&
              static_cast<std::size_t>(abs_err_tab.size()) == groups.size(),
          ErrorKind::invalid_argument, "subgroup_gain: length mismatch");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::vector<SubgroupGain> out;
  std::uint64_t stream = 0;
  for (const auto& [g, idx] : members) {
    SubgroupGain s;
    s.group = g;
    s.n = idx.size();
    const Vector t = gather(abs_err_tab, idx), m = gather(abs_err_img, idx);
    s.mae_tab = t.mean();
    s.mae_img = m.mean();
    s.gain = relative_gain(s.mae_tab, s.mae_img);
    Rng rng(mix_seed(opt.seed, stream++));
    std::vector<double> boots;
    boots.reserve(static_cast<std::size_t>(opt.n_boot));
    for (int b = 0; b < opt.n_boot; ++b) {
      double st = 0, sm = 0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(uniform_index(rng, idx.size()));
        st += t(j);
        sm += m(j);
      }
      boots.push_back(relative_gain(st, sm));
    }
    std::sort(boots.begin(), boots.end());
    if (!boots.empty()) {
      auto q = [&](double p) { return boots[static_cast<std::size_t>(p * static_cast<double>(boots.size() - 1))]; };
      s.ci_low = q(0.025);
      s.ci_high = q(0.975);
    }
    s.low_confidence = s.n < opt.min_n || (s.ci_high - s.ci_low) > opt.max_ci_width;
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Permutation importance. A block is a set of columns permuted jointly with the
// same row permutation (one-hot blocks belong to one source variable).

using Predictor = std::function<Vector(const Matrix&)>;
using Block = std::pair<std::string, std::vector<std::size_t>>;

struct Importance {
  std::string feature;
  double mean = 0;  // mean increase in loss
  double sd = 0;
  double se = 0;
  std::vector<double> repeats;
};

inline std::vector<Importance> permutation_importance(const Predictor& predict, const Matrix& X, const Vector& y,
                                                      const std::vector<Block>& blocks, int n_repeats,
                                                      std::uint64_t seed) {
  require(n_repeats >= 1, ErrorKind::invalid_argument, "permutation_importance: n_repeats must be >= 1");
  require(X.rows() == y.size() && X.rows() > 1, ErrorKind::invalid_argument,
          "permutation_importance: X/y mismatch or too few rows");
  const double base = mse(y, predict(X));
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<Importance> out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Importance imp;
    imp.feature = blocks[b].first;
    for (int r = 0; r < n_repeats; ++r) {
      Rng rng(mix_seed(seed, b * 100003 + static_cast<std::uint64_t>(r)));
      const auto perm = permutation(n, rng);
      Matrix Xp = X;
      for (std::size_t c : blocks[b].second) {
        const auto cc = static_cast<Eigen::Index>(c);
        for (std::size_t i = 0; i < n; ++i)
          Xp(static_cast<Eigen::Index>(i), cc) = X(static_cast<Eigen::Index>(perm[i]), cc);
      }
      imp.repeats.push_back(mse(y, predict(Xp)) - base);
    }
    Vector v = Eigen::Map<const Vector>(imp.repeats.data(), n_repeats);
    imp.mean = v.mean();
    imp.sd = std::sqrt(sample_variance(v));
    imp.se = imp.sd / std::sqrt(static_cast<double>(n_repeats));
    out.push_back(std::move(imp));
  }
  return out;
}

// Descending by mean; ties by name.
inline std::vector<Importance> ranked(std::vector<Importance> v) {
  std::stable_sort(v.begin(), v.end(), [](const Importance& a, const Importance& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.feature < b.feature;
  });
  return v;
}

inline std::string importance_csv(const std::vector<Importance>& v) {
  csv::Writer w({"feature", "mean_delta_mse", "sd", "se"});
  for (const auto& i : v)
    w.row({i.feature, csv::format_number(i.mean), csv::format_number(i.sd), csv::format_number(i.se)});
  return w.str();
}

// ---------------------------------------------------------------------------
// Residual analytics (residual = realized - predicted, log scale).

struct DecileRow {
  int decile = 0;  // 1 = lowest realized prices
  std::size_t n = 0;
  double y_low = 0, y_high = 0;
  double mean_residual = 0, median_residual = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

inline std::vector<DecileRow> residual_deciles(const Vector& y, const Vector& p, int n_bins = 10) {
  check_pair(y, p, "residual_deciles");
  const auto n = static_cast<std::size_t>(y.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y(static_cast<Eigen::Index>(a)) < y(static_cast<Eigen::Index>(b));
  });
  std::vector<DecileRow> out;
  for (int k = 0; k < n_bins; ++k) {
    const std::size_t lo = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(n_bins);
    const std::size_t hi = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(n_bins);
    DecileRow d;
    d.decile = k + 1;
    d.n = hi - lo;
    if (d.n == 0) {
      out.push_back(d);
      continue;
    }
    std::vector<double> res;
    for (std::size_t t = lo; t < hi; ++t) {
      const auto i = static_cast<Eigen::Index>(order[t]);
      res.push_back(y(i) - p(i));
    }
    d.y_low = y(static_cast<Eigen::Index>(order[lo]));
    d.y_high = y(static_cast<Eigen::Index>(order[hi - 1]));
    d.mean_residual = std::accumulate(res.begin(), res.end(), 0.0) / static_cast<double>(res.size());
    d.median_residual = median(res);
    out.push_back(d);
  }
  return out;
}

struct GroupBias {
  std::string group;
  std::size_t n = 0;
  double mean_residual = 0;
};

struct GroupBiasReport {
  std::vector<GroupBias> under;  // largest positive mean residual first
  std::vector<GroupBias> over;   // most negative first
};

inline GroupBiasReport grouped_residual_bias(const Vector& residuals, const std::vector<std::string>& groups,
                                             std::size_t top_k, std::size_t min_n = 1) {
  require(static_cast<std::size_t>(residuals.size()) == groups.size(), ErrorKind::invalid_argument,
          "grouped_residual_bias: length mismatch");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& a = acc[groups[i]];
    a.first += residuals(static_cast<Eigen::Index>(i));
    ++a.second;
  }
  std::vector<GroupBias> all;
  for (const auto& [g, a] : acc)
    if (a.second >= min_n) all.push_back({g, a.second, a.first / static_cast<double>(a.second)});
  GroupBiasReport r;
  r.under = all;
  std::stable_sort(r.under.begin(), r.under.end(), [](const GroupBias& a, const GroupBias& b) {
    return a.mean_residual > b.mean_residual;
  });
  r.over = all;
  std::stable_sort(r.over.begin(), r.over.end(), [](const GroupBias& a, const GroupBias& b) {
    return a.mean_residual < b.mean_residual;
  });
  if (r.under.size() > top_k) r.under.resize(top_k);
  if (r.over.size() > top_k) r.over.resize(top_k);
  return r;
}

// ---------------------------------------------------------------------------
// Classification

struct RocPoint {
  double threshold = 0, fpr = 0, tpr = 0;
};

struct ClassificationReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double recall_positive = 0, recall_negative = 0, accuracy = 0;
  double auc = 0;
  double threshold = 0.5;
  std::vector<RocPoint> roc;

  nlohmann::json to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn},
            {"recall_sold", recall_positive}, {"recall_unsold", recall_negative},
            {"accuracy", accuracy}, {"auc", auc}, {"threshold", threshold}};
  }
};

inline void check_labels(const Vector& scores, const std::vector<int>& labels) {
  require(static_cast<std::size_t>(scores.size()) == labels.size() && !labels.empty(),
          ErrorKind::invalid_argument, "classification: scores/labels length mismatch");
  for (int l : labels) require(l == 0 || l == 1, ErrorKind::invalid_argument, "classification: labels must be 0/1");
}

// ROC over every distinct score (descending), AUC by the trapezoid rule.
inline ClassificationReport roc_auc(const Vector& scores, const std::vector<int>& labels, double threshold = 0.5) {
  check_labels(scores, labels);
  ClassificationReport r;
  r.threshold = threshold;
  const auto n = labels.size();
  std::size_t pos = 0;
  for (int l : labels) pos += static_cast<std::size_t>(l);
  const std::size_t neg = n - pos;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pred = scores(static_cast<Eigen::Index>(i)) >= threshold;
    if (labels[i] == 1) (pred ? r.tp : r.fn)++;
    else (pred ? r.fp : r.tn)++;
  }
  r.recall_positive = pos ? static_cast<double>(r.tp) / static_cast<double>(pos) : 0.0;
  r.recall_negative = neg ? static_cast<double>(r.tn) / static_cast<double>(neg) : 0.0;
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  r.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < n;) {
    const double s = scores(static_cast<Eigen::Index>(order[k]));
    while (k < n && scores(static_cast<Eigen::Index>(order[k])) == s) {
      (labels[order[k]] == 1 ? tp : fp)++;
      ++k;
    }
    r.roc.push_back({s, neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0,
                     pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0});
  }
  double auc = 0;
  for (std::size_t k = 1; k < r.roc.size(); ++k)
    auc += (r.roc[k].fpr - r.roc[k - 1].fpr) * 0.5 * (r.roc[k].tpr + r.roc[k - 1].tpr);
  r.auc = (pos && neg) ? auc : 0.5;
  return r;
}

struct AucPermutationTest {
  double auc = 0;
  double null_mean = 0;
  double null_sd = 0;
  double z = 0;  // (auc - 0.5) / null_sd
};

inline AucPermutationTest auc_permutation_test(const Vector& scores, const std::vector<int>& labels, int n_perm,
                                               std::uint64_t seed) {
  AucPermutationTest t;
  t.auc = roc_auc(scores, labels).auc;
  Rng rng(mix_seed(seed, 0xA0C));
  std::vector<int> shuffled = labels;
  Vector null(n_perm);
  for (int k = 0; k < n_perm; ++k) {
    shuffle(shuffled.begin(), shuffled.end(), rng);
    null(k) = roc_auc(scores, shuffled).auc;
  }
  t.null_mean = null.mean();
  t.null_sd = std::sqrt(sample_variance(null));
  t.z = t.null_sd > 0 ? (t.auc - 0.5) / t.null_sd : 0.0;
  return t;
}

struct Summary {
  std::size_t n = 0;
  double mean = 0, sd = 0, q25 = 0, median = 0, q75 = 0;
};

inline Summary summarize(std::vector<double> v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const Vector m = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  s.mean = m.mean();
  s.sd = std::sqrt(sample_variance(m));
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.q25 = q(0.25);
  s.median = q(0.5);
  s.q75 = q(0.75);
  return s;
}

// Feature distribution per confusion cell ("tp", "fp", "tn", "fn").
inline std::map<std::string, Summary> error_type_distributions(const std::vector<int>& predicted,
                                                               const std::vector<int>& labels,
                                                               const Vector& feature) {
  require(predicted.size() == labels.size() && static_cast<std::size_t>(feature.size()) == labels.size(),
          ErrorKind::invalid_argument, "error_type_distributions: length mismatch");
  std::map<std::string, std::vector<double>> cells = {{"tp", {}}, {"fp", {}}, {"tn", {}}, {"fn", {}}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const char* key = labels[i] == 1 ? (predicted[i] == 1 ? "tp" : "fn") : (predicted[i] == 1 ? "fp" : "tn");
    cells[key].push_back(feature(static_cast<Eigen::Index>(i)));
  }
  std::map<std::string, Summary> out;
  for (auto& [k, v] : cells) out[k] = summarize(std::move(v));
  return out;
}

// Seeded split preserving the label ratio in both parts.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<int>& labels,
                                                                                      double test_fraction,
                                                                                      std::uint64_t seed) {
  require(test_fraction > 0 && test_fraction < 1, ErrorKind::invalid_argument,
          "stratified_split: test fraction must be in (0,1)");
  std::vector<std::size_t> train, test;
  Rng rng(mix_seed(seed, 0x57A7));
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(idx.size())));
    test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

}  // namespace artval::eval

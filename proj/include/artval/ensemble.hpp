#pragma once

// Two-stage stack: out-of-fold first-stage predictions combined with the
// presale estimate bounds by a boosted meta-learner.

#include "artval/boosting.hpp"
#include "artval/core.hpp"
#include "artval/eval.hpp"
#include "artval/linmod.hpp"

#include <functional>
#include <memory>
#include <map>
#include <string>
#include <vector>

namespace artval::ensemble {

// Fits on (X, y) and returns a predictor for new rows.
using Learner = std::function<eval::Predictor(const Matrix&, const Vector&)>;

inline Learner boost_learner(const boosting::Params& params) {
  return [params](const Matrix& X, const Vector& y) -> eval::Predictor {
    auto model = std::make_shared<boosting::BoostModel>(boosting::fit_boost(X, y, params));
    return [model](const Matrix& Z) { return model->predict(Z); };
  };
}

struct StackConfig {
  int k_folds = 5;
  boosting::Params base_params;
  boosting::Params meta_params;
  std::uint64_t seed = 0;

  void validate() const { require(k_folds >= 2, ErrorKind::invalid_argument, "stack: k_folds must be >= 2"); }
};

struct OofResult {
  Vector oof;   // one prediction per training row, from the model that excluded its fold
  Vector test;  // mean over the K fold models
  std::vector<int> fold;
};

inline OofResult oof_predictions(const Matrix& X, const Vector& y, const Matrix& X_test, int k_folds,
                                 std::uint64_t seed, const Learner& learner) {
  require(k_folds >= 2, ErrorKind::invalid_argument, "oof: k_folds must be >= 2");
  require(X.rows() == y.size(), ErrorKind::invalid_argument, "oof: X/y row mismatch");
  require(X.rows() >= k_folds, ErrorKind::invalid_argument, "oof: fewer rows than folds");
  OofResult r;
  r.fold = linmod::fold_assignment(static_cast<std::size_t>(X.rows()), k_folds, seed);
  r.oof = Vector::Zero(X.rows());
  r.test = Vector::Zero(X_test.rows());
  for (int f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < r.fold.size(); ++i) (r.fold[i] == f ? te : tr).push_back(i);
    if (tr.size() < 2)
      fail(ErrorKind::data, "oof: fold " + std::to_string(f) + " leaves fewer than 2 training rows");
    const auto predict = learner(gather_rows(X, tr), gather(y, tr));
    const Vector p = predict(gather_rows(X, te));
    for (std::size_t k = 0; k < te.size(); ++k) r.oof(static_cast<Eigen::Index>(te[k])) = p(static_cast<Eigen::Index>(k));
    if (X_test.rows() > 0) r.test += predict(X_test);
  }
  r.test /= static_cast<double>(k_folds);
  return r;
}

// Meta inputs in log space: [first-stage log price, log low, log high].
inline Matrix meta_features(const Vector& stage1, const Vector& estimate_low, const Vector& estimate_high) {
  require(stage1.size() == estimate_low.size() && stage1.size() == estimate_high.size(),
          ErrorKind::invalid_argument, "stack: input length mismatch");
  Matrix m(stage1.size(), 3);
  m.col(0) = stage1;
  m.col(1) = estimate_low.array().log().matrix();
  m.col(2) = estimate_high.array().log().matrix();
  require(m.allFinite(), ErrorKind::data, "stack: estimates must be positive");
  return m;
}

inline const std::vector<std::string>& meta_feature_names() {
  static const std::vector<std::string> n = {"stage1_prediction", "log_estimate_low", "log_estimate_high"};
  return n;
}

struct StackModel {
  boosting::BoostModel meta;
  bool identity = false;  // pass the first-stage prediction through unchanged

  Vector predict(const Vector& stage1, const Vector& low, const Vector& high) const {
    if (identity) return stage1;
    return meta.predict(meta_features(stage1, low, high));
  }
};

inline StackModel fit_stack(const Vector& oof, const Vector& estimate_low, const Vector& estimate_high,
                            const Vector& y, const boosting::Params& meta_params) {
  StackModel s;
  s.meta = boosting::fit_boost(meta_features(oof, estimate_low, estimate_high), y, meta_params,
                               meta_feature_names());
  return s;
}

inline StackModel identity_stack() {
  StackModel s;
  s.identity = true;
  return s;
}

// Benchmark using the two estimate bounds as the only regressors.
inline boosting::BoostModel fit_estimates_only(const Vector& estimate_low, const Vector& estimate_high,
                                               const Vector& y, const boosting::Params& params) {
  Matrix X(y.size(), 2);
  X.col(0) = estimate_low.array().log().matrix();
  X.col(1) = estimate_high.array().log().matrix();
  return boosting::fit_boost(X, y, params, {"log_estimate_low", "log_estimate_high"});
}

inline Vector predict_estimates_only(const boosting::BoostModel& m, const Vector& low, const Vector& high) {
  Matrix X(low.size(), 2);
  X.col(0) = low.array().log().matrix();
  X.col(1) = high.array().log().matrix();
  return m.predict(X);
}

struct ResidualComparison {
  std::vector<eval::DecileRow> stack;
  std::vector<eval::DecileRow> estimates_only;
  double skew_stack = 0;
  double skew_estimates_only = 0;
  double skew_low_estimate = 0;  // residual against log low estimate
};

struct StackReport {
  eval::EvalReport stack;
  eval::EvalReport estimates_only;
  ResidualComparison residuals;
};

inline StackReport stack_report(const Vector& y, const Vector& stack_pred, const Vector& est_only_pred,
                                const Vector& estimate_low, const std::vector<bool>& is_fresh) {
  StackReport r;
  r.stack = eval::stratified_report("stack", y, stack_pred, is_fresh);
  r.estimates_only = eval::stratified_report("estimates_only", y, est_only_pred, is_fresh);
  r.residuals.stack = eval::residual_deciles(y, stack_pred);
  r.residuals.estimates_only = eval::residual_deciles(y, est_only_pred);
  r.residuals.skew_stack = skewness(y - stack_pred);
  r.residuals.skew_estimates_only = skewness(y - est_only_pred);
  r.residuals.skew_low_estimate = skewness(y - estimate_low.array().log().matrix());
  return r;
}

// Base learner: boosting on the tabular design; meta learner: shallow boosting
// on [stage-1, log low, log high].
inline StackConfig default_stack_config(std::uint64_t seed = 0) {
  StackConfig c;
  c.seed = seed;
  c.base_params.rounds = 200;
  c.base_params.seed = seed;
  c.meta_params.max_depth = 3;
  c.meta_params.rounds = 200;
  c.meta_params.seed = seed;
  return c;
}

struct StackInputs {
  Matrix X;
  Vector y, estimate_low, estimate_high;
};

struct StackRun {
  OofResult stage1;
  StackModel stack;
  boosting::BoostModel estimates_only;
  Matrix meta_test;
  Vector stack_pred, estimates_only_pred;
  StackReport report;
};

inline StackRun run_stack(const StackInputs& train, const StackInputs& test, const std::vector<bool>& test_is_fresh,
                          const StackConfig& cfg) {
  cfg.validate();
  StackRun r;
  r.stage1 = oof_predictions(train.X, train.y, test.X, cfg.k_folds, cfg.seed, boost_learner(cfg.base_params));
  r.stack = fit_stack(r.stage1.oof, train.estimate_low, train.estimate_high, train.y, cfg.meta_params);
  r.estimates_only = fit_estimates_only(train.estimate_low, train.estimate_high, train.y, cfg.meta_params);
  r.meta_test = meta_features(r.stage1.test, test.estimate_low, test.estimate_high);
  r.stack_pred = r.stack.predict(r.stage1.test, test.estimate_low, test.estimate_high);
  r.estimates_only_pred = predict_estimates_only(r.estimates_only, test.estimate_low, test.estimate_high);
  r.report = stack_report(test.y, r.stack_pred, r.estimates_only_pred, test.estimate_low, test_is_fresh);
  return r;
}

struct ShapSummary {
  Matrix contributions;  // rows x 3
  double base_value = 0;
  std::vector<std::string> features;
  std::map<std::string, Vector> category_means;  // category -> mean contribution per feature
  std::map<std::string, double> category_mean_prediction;
};

inline ShapSummary shap_summary(const StackModel& stack, const Matrix& meta_x,
                                const std::vector<std::string>& categories) {
  require(!stack.identity, ErrorKind::invalid_argument, "shap_summary: identity stack has no meta-learner");
  require(static_cast<std::size_t>(meta_x.rows()) == categories.size(), ErrorKind::invalid_argument,
          "shap_summary: category labels length mismatch");
  ShapSummary s;
  auto [phi, base] = boosting::shap_matrix(stack.meta, meta_x);
  s.contributions = std::move(phi);
  s.base_value = base;
  s.features = meta_feature_names();
  const Vector pred = stack.meta.predict_margin(meta_x);
  std::map<std::string, std::pair<Vector, std::pair<double, std::size_t>>> acc;
  for (Eigen::Index i = 0; i < meta_x.rows(); ++i) {
    auto& a = acc[categories[static_cast<std::size_t>(i)]];
    if (a.first.size() == 0) a.first = Vector::Zero(meta_x.cols());
    a.first += s.contributions.row(i).transpose();
    a.second.first += pred(i);
    ++a.second.second;
  }
  for (auto& [c, a] : acc) {
    const auto n = static_cast<double>(a.second.second);
    s.category_means[c] = a.first / n;
    s.category_mean_prediction[c] = a.second.first / n;
  }
  return s;
}

}  // namespace artval::ensemble

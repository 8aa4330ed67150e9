#include "artval/embed.hpp"
#include "artval/ensemble.hpp"
#include "artval/eval.hpp"

#include <gtest/gtest.h>

using namespace artval;

// Mann-Whitney form: P(score+ > score-) + 0.5 P(tie), over all pairs.
TEST(EvalOracles, AucMatchesPairwiseUStatistic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const int n = 150;
    Vector s(n);
    std::vector<int> lab(n);
    for (int i = 0; i < n; ++i) {
      lab[static_cast<std::size_t>(i)] = bernoulli(rng, 0.4) ? 1 : 0;
      // coarse grid so ties occur
      s(i) = std::round(4 * (normal01(rng) + 0.8 * lab[static_cast<std::size_t>(i)])) / 4;
    }
    double wins = 0;
    long pairs = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (lab[static_cast<std::size_t>(i)] == 1 && lab[static_cast<std::size_t>(j)] == 0) {
          wins += s(i) > s(j) ? 1.0 : (s(i) == s(j) ? 0.5 : 0.0);
          ++pairs;
        }
    EXPECT_NEAR(eval::roc_auc(s, lab).auc, wins / static_cast<double>(pairs), 1e-12);
  }
}

TEST(EvalOracles, ConfusionCountsAtThreshold) {
  Vector s(6);
  s << 0.9, 0.8, 0.4, 0.6, 0.2, 0.5;
  const std::vector<int> lab = {1, 1, 1, 0, 0, 0};
  const auto r = eval::roc_auc(s, lab, 0.5);
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.fp, 2u);
  EXPECT_EQ(r.tn, 1u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.auc, 7.0 / 9.0, 1e-12);
}

TEST(EvalOracles, PermutationNullIsCenteredAtHalf) {
  Rng rng(3);
  Vector s(400);
  std::vector<int> lab(400);
  for (int i = 0; i < 400; ++i) {
    s(i) = normal01(rng);
    lab[static_cast<std::size_t>(i)] = i % 2;
  }
  const auto t = eval::auc_permutation_test(s, lab, 300, 1);
  EXPECT_NEAR(t.null_mean, 0.5, 0.01);
  // analytic sd of the AUC under the null: sqrt((n1+n0+1)/(12 n1 n0))
  EXPECT_NEAR(t.null_sd, std::sqrt(401.0 / (12.0 * 200 * 200)), 0.004);
}

TEST(EvalOracles, R2AndErrorMetrics) {
  Vector y(4), p(4);
  y << 1, 2, 3, 4;
  p << 1.5, 2, 2.5, 4;
  EXPECT_NEAR(eval::r2_log(y, p), 1.0 - 0.5 / 5.0, 1e-12);
  EXPECT_NEAR(eval::mae_log(y, p), 0.25, 1e-12);
  EXPECT_NEAR(eval::mse(y, p), 0.125, 1e-12);
  EXPECT_NEAR(eval::mape_raw(y, p), 100.0 * (std::exp(0.5) - 1 + 1 - std::exp(-0.5)) / 4, 1e-9);
}

// Samples with covariance diag(4, 1) have eigenvalue shares 0.8 and 0.2.
TEST(EvalOracles, PcaRatiosMatchAnalyticEigenvalues) {
  Rng rng(7);
  Matrix x(20000, 2);
  for (int i = 0; i < x.rows(); ++i) {
    x(i, 0) = 2.0 * normal01(rng) + 3.0;
    x(i, 1) = normal01(rng) - 1.0;
  }
  const auto r = embed::pca_project(x);
  EXPECT_NEAR(r.projection.explained_variance_ratio(0), 0.8, 0.02);
  EXPECT_NEAR(r.projection.explained_variance_ratio(1), 0.2, 0.02);
  EXPECT_NEAR(std::abs(r.projection.components(0, 0)), 1.0, 0.01);
  // components are orthonormal
  const Matrix g = r.projection.components * r.projection.components.transpose();
  EXPECT_LT((g - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EvalOracles, PcaIsotropicSharesAreEqual) {
  Rng rng(8);
  Matrix x(50000, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal01(rng);
  const auto r = embed::pca_project(x);
  EXPECT_NEAR(r.projection.explained_variance_ratio(0), 0.2, 0.02);
  EXPECT_NEAR(r.projection.explained_variance_ratio(1), 0.2, 0.02);
}

TEST(EvalOracles, PcaOfCollinearPointsWarns) {
  Matrix x(10, 3);
  for (int i = 0; i < 10; ++i) x.row(i) << i, 2.0 * i, -1.0 * i;
  const auto r = embed::pca_project(x);
  EXPECT_NEAR(r.projection.explained_variance_ratio(0), 1.0, 1e-12);
  EXPECT_EQ(r.projection.explained_variance_ratio(1), 0.0);
  EXPECT_EQ(r.projection.warnings.size(), 1u);
  // projection of new data uses the stored means
  const Matrix proj = r.projection.project(x);
  EXPECT_LT((proj - r.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EvalOracles, PcaRejectsIdenticalVectors) {
  const Matrix x = Matrix::Ones(5, 3);
  EXPECT_THROW(embed::pca_project(x), Error);
}

namespace {

ensemble::Learner mean_learner() {
  return [](const Matrix&, const Vector& y) -> eval::Predictor {
    const double m = y.mean();
    return [m](const Matrix& Z) { return Vector::Constant(Z.rows(), m); };
  };
}

}  // namespace

// With a learner that predicts the training mean, each out-of-fold value is
// the mean over the other folds.
TEST(EvalOracles, OutOfFoldPredictionsExcludeOwnFold) {
  Rng rng(2);
  const int n = 37;
  Matrix X = Matrix::Zero(n, 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = normal01(rng);
  const Matrix Xt = Matrix::Zero(3, 1);
  const auto r = ensemble::oof_predictions(X, y, Xt, 5, 11, mean_learner());
  Vector test_expected = Vector::Zero(3);
  for (int f = 0; f < 5; ++f) {
    double s = 0;
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (r.fold[static_cast<std::size_t>(i)] != f) s += y(i), ++c;
    for (int i = 0; i < n; ++i)
      if (r.fold[static_cast<std::size_t>(i)] == f) {
        EXPECT_NEAR(r.oof(i), s / c, 1e-12);
      }
    test_expected.array() += s / c / 5.0;
  }
  EXPECT_LT((r.test - test_expected).cwiseAbs().maxCoeff(), 1e-12);

  // leave-one-out as the k = n case
  const auto loo = ensemble::oof_predictions(X, y, Xt, n, 11, mean_learner());
  for (int i = 0; i < n; ++i) EXPECT_NEAR(loo.oof(i), (y.sum() - y(i)) / (n - 1), 1e-12);
}

TEST(EvalOracles, FoldsAreBalanced) {
  const auto f = linmod::fold_assignment(103, 5, 1);
  std::vector<int> count(5);
  for (int k : f) ++count[static_cast<std::size_t>(k)];
  for (int c : count) EXPECT_TRUE(c == 20 || c == 21);
}

TEST(EvalOracles, ResidualDecilesPartitionRows) {
  Rng rng(4);
  Vector y(95), p(95);
  for (int i = 0; i < 95; ++i) {
    y(i) = normal01(rng);
    p(i) = y(i) + 0.1 * normal01(rng);
  }
  const auto d = eval::residual_deciles(y, p);
  ASSERT_EQ(d.size(), 10u);
  std::size_t total = 0;
  double weighted = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    total += d[k].n;
    weighted += d[k].mean_residual * static_cast<double>(d[k].n);
    if (k) {
      EXPECT_LE(d[k - 1].y_high, d[k].y_low);
    }
  }
  EXPECT_EQ(total, 95u);
  EXPECT_NEAR(weighted / 95.0, (y - p).mean(), 1e-12);
}

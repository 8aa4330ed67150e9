#include "artval/boosting.hpp"

#include <gtest/gtest.h>

#include <bit>

using namespace artval;

namespace {

Matrix random_matrix(int n, int d, Rng& rng, bool integer_grid) {
  Matrix X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i)
    X.data()[i] = integer_grid ? static_cast<double>(uniform_index(rng, 7)) : normal01(rng);
  return X;
}

// Expected tree output when only features in `mask` are known, averaging
// unknown splits by training cover.
double conditional_value(const boosting::Tree& t, const Vector& x, unsigned mask, int k = 0) {
  const auto& nd = t.nodes[static_cast<std::size_t>(k)];
  if (nd.is_leaf()) return nd.leaf_value;
  if (mask & (1u << nd.feature))
    return conditional_value(t, x, mask, x(nd.feature) < nd.threshold ? nd.left : nd.right);
  const auto& l = t.nodes[static_cast<std::size_t>(nd.left)];
  const auto& r = t.nodes[static_cast<std::size_t>(nd.right)];
  return (l.cover * conditional_value(t, x, mask, nd.left) + r.cover * conditional_value(t, x, mask, nd.right)) /
         nd.cover;
}

double model_value(const boosting::BoostModel& m, const Vector& x, unsigned mask) {
  double v = m.base_score;
  for (const auto& t : m.trees) v += m.eta * conditional_value(t, x, mask);
  return v;
}

// Shapley values by enumerating all 2^d coalitions.
Vector exhaustive_shapley(const boosting::BoostModel& m, const Vector& x) {
  const int d = m.n_features;
  std::vector<double> v(1u << d);
  for (unsigned s = 0; s < v.size(); ++s) v[s] = model_value(m, x, s);
  std::vector<double> fact(static_cast<std::size_t>(d) + 1, 1.0);
  for (int k = 1; k <= d; ++k) fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k) - 1] * k;
  Vector phi = Vector::Zero(d);
  for (int j = 0; j < d; ++j)
    for (unsigned s = 0; s < v.size(); ++s) {
      if (s & (1u << j)) continue;
      const int k = std::popcount(s);
      const double w = fact[static_cast<std::size_t>(k)] * fact[static_cast<std::size_t>(d - k - 1)] /
                       fact[static_cast<std::size_t>(d)];
      phi(j) += w * (v[s | (1u << j)] - v[s]);
    }
  return phi;
}

}  // namespace

class TreeShapOracle : public ::testing::TestWithParam<int> {};

TEST_P(TreeShapOracle, MatchesExhaustiveShapley) {
  const int d = GetParam();
  Rng rng(mix_seed(42, static_cast<std::uint64_t>(d)));
  const Matrix X = random_matrix(300, d, rng, d % 2 == 0);
  Vector y(300);
  for (int i = 0; i < 300; ++i)
    y(i) = X(i, 0) * X(i, 1 % d) + std::sin(X(i, d - 1)) + (X(i, d / 2) > 0.5 ? 1.0 : 0.0) + 0.1 * normal01(rng);
  boosting::Params p;
  p.rounds = 12;
  p.max_depth = 5;
  p.subsample = 0.8;
  p.colsample = 0.8;
  p.seed = 3;
  const auto m = boosting::fit_boost(X, y, p);
  for (int i = 0; i < 6; ++i) {
    const Vector x = X.row(i).transpose();
    const auto shap = boosting::tree_shap(m, x);
    const Vector oracle = exhaustive_shapley(m, x);
    for (int j = 0; j < d; ++j) EXPECT_NEAR(shap.contributions(j), oracle(j), 1e-6) << "row " << i << " feature " << j;
    // local accuracy
    EXPECT_NEAR(shap.base_value + shap.contributions.sum(), m.predict_margin(X.row(i)).value(), 1e-9);
    EXPECT_NEAR(shap.base_value, model_value(m, x, 0u), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Dimensions, TreeShapOracle, ::testing::Values(2, 5, 8, 12));

// One depth-1 tree with lambda 0 must pick the SSE-minimizing split among all
// (feature, cut) pairs.
TEST(BoostOracles, SingleStumpMatchesExhaustiveSplitSearch) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int n = 40, d = 3;
    const Matrix X = random_matrix(n, d, rng, seed % 2 == 0);
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = static_cast<double>(uniform_index(rng, 21)) - 10.0;
    boosting::Params p;
    p.rounds = 1;
    p.max_depth = 1;
    p.eta = 1.0;
    p.lambda = 0.0;
    p.subsample = 1.0;
    p.min_child_weight = 0.0;
    p.base_score = 0.0;
    const auto m = boosting::fit_boost(X, y, p);

    // brute force: every feature, every cut between distinct sorted values
    double best_sse = (y.array() - y.mean()).square().sum();
    int best_f = -1;
    double best_cut = 0;
    for (int f = 0; f < d; ++f) {
      std::vector<double> vals(X.col(f).data(), X.col(f).data() + n);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t k = 1; k < vals.size(); ++k) {
        const double cut = 0.5 * (vals[k - 1] + vals[k]);
        double sl = 0, sr = 0;
        int nl = 0, nr = 0;
        for (int i = 0; i < n; ++i) (X(i, f) < cut ? (sl += y(i), ++nl) : (sr += y(i), ++nr));
        double sse = 0;
        for (int i = 0; i < n; ++i) {
          const double mu = X(i, f) < cut ? sl / nl : sr / nr;
          sse += (y(i) - mu) * (y(i) - mu);
        }
        if (sse < best_sse - 1e-9) best_sse = sse, best_f = f, best_cut = cut;
      }
    }
    ASSERT_EQ(m.trees.size(), 1u);
    const auto& root = m.trees[0].nodes[0];
    ASSERT_EQ(root.feature, best_f) << "seed " << seed;
    // same partition of the training rows
    for (int i = 0; i < n; ++i) EXPECT_EQ(X(i, best_f) < root.threshold, X(i, best_f) < best_cut);
    // leaves are side means, so the fitted SSE equals the brute-force optimum
    const Vector r = y - m.predict(X);
    EXPECT_NEAR(r.squaredNorm(), best_sse, 1e-9);
    EXPECT_NEAR(root.gain, 0.5 * ((y.array() - y.mean()).square().sum() - best_sse), 1e-9);
  }
}

TEST(BoostOracles, LogisticMarginsAreProbabilities) {
  Rng rng(5);
  const Matrix X = random_matrix(200, 3, rng, false);
  Vector y(200);
  for (int i = 0; i < 200; ++i) y(i) = X(i, 0) + 0.3 * normal01(rng) > 0 ? 1.0 : 0.0;
  boosting::Params p;
  p.loss = boosting::Loss::logistic;
  p.rounds = 30;
  const auto m = boosting::fit_boost(X, y, p);
  const Vector prob = m.predict(X);
  const Vector margin = m.predict_margin(X);
  for (int i = 0; i < 200; ++i) EXPECT_NEAR(prob(i), 1.0 / (1.0 + std::exp(-margin(i))), 1e-12);
}

TEST(BoostOracles, JsonRoundTripPreservesPredictions) {
  Rng rng(9);
  const Matrix X = random_matrix(100, 4, rng, false);
  const Vector y = X.col(0) + X.col(1).cwiseAbs();
  boosting::Params p;
  p.rounds = 20;
  const auto m = boosting::fit_boost(X, y, p);
  const auto back = boosting::BoostModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ((m.predict(X) - back.predict(X)).cwiseAbs().maxCoeff(), 0.0);
}

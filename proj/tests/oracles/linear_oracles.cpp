#include "artval/linmod.hpp"

#include <gtest/gtest.h>

using namespace artval;

namespace {

struct Problem {
  Matrix X;
  Vector y;
};

Problem random_problem(int n, int d, std::uint64_t seed, double noise = 0.5) {
  Rng rng(seed);
  Problem p;
  p.X.resize(n, d);
  for (Eigen::Index i = 0; i < p.X.size(); ++i) p.X.data()[i] = normal01(rng) + 0.3;
  Vector w(d);
  for (int j = 0; j < d; ++j) w(j) = j % 3 == 0 ? 0.0 : normal01(rng);
  p.y = (p.X * w).array() + 1.5;
  for (int i = 0; i < n; ++i) p.y(i) += noise * normal01(rng);
  return p;
}

Matrix with_intercept(const Matrix& X) {
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return A;
}

}  // namespace

TEST(LinearOracles, OlsMatchesNormalEquations) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = random_problem(80, 6, seed);
    const auto fit = linmod::fit_ols(p.X, p.y);
    const Matrix A = with_intercept(p.X);
    const Vector b = (A.transpose() * A).llt().solve(A.transpose() * p.y);
    EXPECT_NEAR(fit.intercept, b(0), 1e-8);
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(fit.beta(j), b(j + 1), 1e-8) << "coef " << j;
  }
}

TEST(LinearOracles, OlsRejectsCollinearDesign) {
  auto p = random_problem(30, 3, 4);
  p.X.col(2) = 2.0 * p.X.col(0) - p.X.col(1);
  try {
    linmod::fit_ols(p.X, p.y);
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

// Ridge as ordinary least squares on the augmented system [Xc; sqrt(l) I].
TEST(LinearOracles, RidgeMatchesAugmentedLeastSquares) {
  const auto p = random_problem(60, 5, 7);
  for (double lambda : {0.01, 1.0, 50.0}) {
    const auto fit = linmod::fit_ridge(p.X, p.y, lambda);
    const Vector xm = p.X.colwise().mean().transpose();
    const Matrix Xc = p.X.rowwise() - xm.transpose();
    const Vector yc = p.y.array() - p.y.mean();
    Matrix Aug(Xc.rows() + 5, 5);
    Aug << Xc, std::sqrt(lambda) * Matrix::Identity(5, 5);
    Vector rhs(Xc.rows() + 5);
    rhs << yc, Vector::Zero(5);
    const Vector b = Aug.householderQr().solve(rhs);
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(fit.beta(j), b(j), 1e-8) << "lambda " << lambda;
    EXPECT_NEAR(fit.intercept, p.y.mean() - xm.dot(b), 1e-8);

    // stationarity of the penalized objective, intercept unpenalized
    const Vector r = p.y - fit.predict(p.X);
    EXPECT_NEAR(r.sum(), 0.0, 1e-8);
    const Vector g = -2.0 * p.X.transpose() * r + 2.0 * lambda * fit.beta;
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(LinearOracles, RidgeAtZeroIsOls) {
  const auto p = random_problem(40, 4, 8);
  const auto a = linmod::fit_ridge(p.X, p.y, 0.0);
  const auto b = linmod::fit_ols(p.X, p.y);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearOracles, LassoSatisfiesKkt) {
  const auto p = random_problem(120, 8, 11);
  const auto grid = linmod::default_lambda_grid(p.X, p.y, 6, 2.0);
  for (double lambda : grid) {
    const auto fit = linmod::fit_lasso(p.X, p.y, lambda);
    const Vector r = p.y - fit.predict(p.X);
    EXPECT_NEAR(r.mean(), 0.0, 1e-9);
    const Vector corr = p.X.transpose() * r / static_cast<double>(p.X.rows());
    for (int j = 0; j < 8; ++j) {
      if (fit.beta(j) != 0.0)
        EXPECT_NEAR(corr(j), lambda * (fit.beta(j) > 0 ? 1.0 : -1.0), 1e-6) << "active " << j;
      else
        EXPECT_LE(std::abs(corr(j)), lambda + 1e-6) << "inactive " << j;
    }
  }
}

TEST(LinearOracles, LassoAboveLambdaMaxIsEmpty) {
  const auto p = random_problem(50, 5, 12);
  const double lmax = linmod::default_lambda_grid(p.X, p.y).front();
  EXPECT_TRUE(linmod::fit_lasso(p.X, p.y, lmax * 1.0001).support().empty());
  EXPECT_FALSE(linmod::fit_lasso(p.X, p.y, lmax * 0.9).support().empty());
}

TEST(LinearOracles, LassoAtZeroIsOls) {
  const auto p = random_problem(60, 4, 13);
  const auto a = linmod::fit_lasso(p.X, p.y, 0.0);
  const auto b = linmod::fit_ols(p.X, p.y);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-6);
}

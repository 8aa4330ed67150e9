#pragma once

// Linear hedonic models: OLS, ridge and cross-validated Lasso, plus the
// Lasso-selection-then-OLS attribution report.

#include "artval/core.hpp"
#include "artval/csv.hpp"
#include "artval/featurize.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace artval::linmod {

enum class Method { ols, ridge, lasso };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::ols: return "ols";
    case Method::ridge: return "ridge";
    case Method::lasso: return "lasso";
  }
  return "?";
}

struct LinearFit {
  Vector beta;
  double intercept = 0;
  double lambda = 0;
  Method method = Method::ols;
  std::vector<std::string> training_columns;

  Vector predict(const Matrix& X) const {
    require(X.cols() == beta.size(), ErrorKind::invalid_argument,
            "linear predict: expected " + std::to_string(beta.size()) + " columns, got " +
                std::to_string(X.cols()));
    return (X * beta).array() + intercept;
  }

  std::vector<std::size_t> support(double tol = 0.0) const {
    std::vector<std::size_t> s;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (std::abs(beta(j)) > tol) s.push_back(static_cast<std::size_t>(j));
    return s;
  }

  nlohmann::json to_json() const {
    return {{"method", to_string(method)},
            {"lambda", lambda},
            {"intercept", intercept},
            {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
            {"columns", training_columns}};
  }

  static LinearFit from_json(const nlohmann::json& j) {
    LinearFit f;
    const auto m = j.at("method").get<std::string>();
    f.method = m == "ols" ? Method::ols : m == "ridge" ? Method::ridge : Method::lasso;
    f.lambda = j.at("lambda").get<double>();
    f.intercept = j.at("intercept").get<double>();
    const auto b = j.at("beta").get<std::vector<double>>();
    f.beta = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    f.training_columns = j.at("columns").get<std::vector<std::string>>();
    return f;
  }
};

namespace detail {

struct Centered {
  Matrix X;
  Vector y;
  Eigen::RowVectorXd x_mean;
  double y_mean;
};

inline Centered center(const Matrix& X, const Vector& y) {
  require(X.rows() == y.size(), ErrorKind::invalid_argument, "design/target row mismatch");
  require(X.rows() > 0, ErrorKind::invalid_argument, "empty design matrix");
  Centered c;
  c.x_mean = X.colwise().mean();
  c.y_mean = y.mean();
  c.X = X.rowwise() - c.x_mean;
  c.y = y.array() - c.y_mean;
  return c;
}

inline std::vector<std::string> default_names(Eigen::Index d) {
  std::vector<std::string> n;
  for (Eigen::Index j = 0; j < d; ++j) n.push_back("x" + std::to_string(j));
  return n;
}

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace detail

struct OlsOptions {
  bool allow_pseudo_inverse = false;
  double rank_tolerance = 1e-10;
};

inline LinearFit fit_ols(const Matrix& X, const Vector& y, std::vector<std::string> names = {},
                         const OlsOptions& opt = {}) {
  if (names.empty()) names = detail::default_names(X.cols());
  const auto c = detail::center(X, y);
  LinearFit fit;
  fit.method = Method::ols;
  fit.training_columns = std::move(names);
  if (X.cols() == 0) {
    fit.beta = Vector(0);
    fit.intercept = c.y_mean;
    return fit;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(c.X);
  qr.setThreshold(opt.rank_tolerance);
  if (qr.rank() < X.cols()) {
    if (!opt.allow_pseudo_inverse) {
      std::string cols;
      const auto& perm = qr.colsPermutation().indices();
      for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) {
        if (!cols.empty()) cols += ", ";
        cols += fit.training_columns[static_cast<std::size_t>(perm(k))];
      }
      fail(ErrorKind::numeric, "fit_ols: design is rank deficient (rank " +
                                   std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) +
                                   "); collinear columns: " + cols);
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c.X);
    cod.setThreshold(opt.rank_tolerance);
    fit.beta = cod.solve(c.y);
  } else {
    fit.beta = qr.solve(c.y);
  }
  fit.intercept = c.y_mean - c.x_mean.dot(fit.beta);
  return fit;
}

// argmin ||y - Xb - b0||^2 + lambda ||b||^2, intercept unpenalized.
inline LinearFit fit_ridge(const Matrix& X, const Vector& y, double lambda,
                           std::vector<std::string> names = {}) {
  require(lambda >= 0, ErrorKind::invalid_argument, "fit_ridge: lambda must be nonnegative");
  if (names.empty()) names = detail::default_names(X.cols());
  if (lambda == 0) {
    auto f = fit_ols(X, y, std::move(names));
    f.method = Method::ridge;
    return f;
  }
  const auto c = detail::center(X, y);
  Matrix gram = c.X.transpose() * c.X;
  gram.diagonal().array() += lambda;
  LinearFit fit;
  fit.method = Method::ridge;
  fit.lambda = lambda;
  fit.training_columns = std::move(names);
  fit.beta = gram.ldlt().solve(c.X.transpose() * c.y);
  fit.intercept = c.y_mean - c.x_mean.dot(fit.beta);
  return fit;
}

struct LassoOptions {
  double tolerance = 1e-10;
  int max_sweeps = 100000;
};

// Coordinate descent on (1/2n)||y - b0 - Xb||^2 + lambda ||b||_1 over
// pre-centered data. `beta` is the warm start and receives the solution.
inline void lasso_descent(const Matrix& Xc, const Vector& yc, double lambda, Vector& beta,
                          const LassoOptions& opt = {}) {
  const auto n = static_cast<double>(Xc.rows());
  const Eigen::Index d = Xc.cols();
  const Vector col_sq = Xc.colwise().squaredNorm().transpose() / n;
  Vector r = yc - Xc * beta;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double max_delta = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (col_sq(j) <= 0) {
        beta(j) = 0;
        continue;
      }
      const double old = beta(j);
      const double rho = Xc.col(j).dot(r) / n + col_sq(j) * old;
      const double updated = detail::soft_threshold(rho, lambda) / col_sq(j);
      if (updated != old) {
        r.noalias() -= (updated - old) * Xc.col(j);
        beta(j) = updated;
        max_delta = std::max(max_delta, std::abs(updated - old) * std::sqrt(col_sq(j)));
      }
    }
    if (max_delta < opt.tolerance) return;
  }
}

inline LinearFit fit_lasso(const Matrix& X, const Vector& y, double lambda,
                           std::vector<std::string> names = {}, const LassoOptions& opt = {}) {
  require(lambda >= 0, ErrorKind::invalid_argument, "fit_lasso: lambda must be nonnegative");
  if (names.empty()) names = detail::default_names(X.cols());
  const auto c = detail::center(X, y);
  LinearFit fit;
  fit.method = Method::lasso;
  fit.lambda = lambda;
  fit.training_columns = std::move(names);
  fit.beta = Vector::Zero(X.cols());
  lasso_descent(c.X, c.y, lambda, fit.beta, opt);
  fit.intercept = c.y_mean - c.x_mean.dot(fit.beta);
  return fit;
}

// 50 log-spaced values from max|X'y|/n down four decades (centered data).
inline std::vector<double> default_lambda_grid(const Matrix& X, const Vector& y, int points = 50,
                                               double decades = 4.0) {
  const auto c = detail::center(X, y);
  const double lmax = (c.X.transpose() * c.y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
  std::vector<double> grid;
  for (int k = 0; k < points; ++k)
    grid.push_back(lmax * std::pow(10.0, -decades * k / (points - 1)));
  return grid;
}

struct LassoCvResult {
  LinearFit fit;
  std::vector<double> grid;  // descending
  std::vector<double> cv_mse;
  std::vector<std::string> warnings;
};

inline std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xF01D));
  const auto perm = permutation(n, rng);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

inline LassoCvResult fit_lasso_cv(const Matrix& X, const Vector& y, std::vector<double> grid,
                                  int k_folds, std::uint64_t seed,
                                  std::vector<std::string> names = {},
                                  const LassoOptions& opt = {}) {
  require(k_folds >= 2, ErrorKind::invalid_argument, "fit_lasso_cv: k_folds must be >= 2");
  require(X.rows() >= k_folds, ErrorKind::invalid_argument, "fit_lasso_cv: fewer rows than folds");
  if (grid.empty()) grid = default_lambda_grid(X, y);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  if (names.empty()) names = detail::default_names(X.cols());
  const auto fold = fold_assignment(static_cast<std::size_t>(X.rows()), k_folds, seed);

  LassoCvResult res;
  res.grid = grid;
  res.cv_mse.assign(grid.size(), 0.0);
  for (int f = 0; f < k_folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    const Matrix Xtr = gather_rows(X, tr);
    const Vector ytr = gather(y, tr);
    const Matrix Xte = gather_rows(X, te);
    const Vector yte = gather(y, te);
    const auto c = detail::center(Xtr, ytr);
    Vector beta = Vector::Zero(X.cols());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      lasso_descent(c.X, c.y, grid[g], beta, opt);
      const double b0 = c.y_mean - c.x_mean.dot(beta);
      const Vector resid = yte - ((Xte * beta).array() + b0).matrix();
      res.cv_mse[g] += resid.squaredNorm() / static_cast<double>(X.rows());
    }
  }
  // smallest CV error; ties resolved toward the larger penalty
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (res.cv_mse[g] < res.cv_mse[best]) best = g;

  const auto c = detail::center(X, y);
  Vector beta = Vector::Zero(X.cols());
  for (std::size_t g = 0; g <= best; ++g) lasso_descent(c.X, c.y, grid[g], beta, opt);
  res.fit.method = Method::lasso;
  res.fit.lambda = grid[best];
  res.fit.training_columns = names;
  res.fit.beta = beta;
  res.fit.intercept = c.y_mean - c.x_mean.dot(beta);

  bool any_nonzero = beta.size() > 0 && beta.cwiseAbs().maxCoeff() > 0;
  for (std::size_t g = best + 1; g < grid.size() && !any_nonzero; ++g) {
    lasso_descent(c.X, c.y, grid[g], beta, opt);
    any_nonzero = beta.cwiseAbs().maxCoeff() > 0;
  }
  if (!any_nonzero)
    res.warnings.push_back("lasso: all coefficients zero at every lambda; intercept-only model");
  return res;
}

// ---------------------------------------------------------------------------
// Lasso selection followed by OLS with classical standard errors.

struct CoefficientRow {
  std::string name;
  double coef = 0, std_err = 0, t = 0, p = 0, ci_low = 0, ci_high = 0;
};

struct OlsAttributionReport {
  std::vector<CoefficientRow> rows;  // "const" first
  double r2 = 0, adj_r2 = 0, f_stat = 0;
  std::size_t n = 0;
  std::size_t df_resid = 0;
  double lasso_lambda = 0;
  std::vector<std::string> lasso_support;

  std::string to_text() const {
    std::ostringstream os;
    os << "Model: OLS   Method: Least Squares   No. Observations: " << n << "\n";
    os << "R-squared: " << csv::format_fixed(r2, 3) << "   Adj. R-squared: "
       << csv::format_fixed(adj_r2, 3) << "   F-statistic: " << csv::format_fixed(f_stat, 2) << "\n";
    std::size_t w = 5;
    for (const auto& r : rows) w = std::max(w, r.name.size());
    auto pad = [](std::string s, std::size_t width) {
      if (s.size() < width) s.insert(0, width - s.size(), ' ');
      return s;
    };
    os << std::string(w, ' ') << pad("coef", 10) << pad("std err", 10) << pad("t", 9)
       << pad("P>|t|", 8) << pad("[0.025", 10) << pad("0.975]", 10) << "\n";
    for (const auto& r : rows) {
      std::string name = r.name;
      name.resize(w, ' ');
      os << name << pad(csv::format_fixed(r.coef, 4), 10) << pad(csv::format_fixed(r.std_err, 3), 10)
         << pad(csv::format_fixed(r.t, 3), 9) << pad(csv::format_fixed(r.p, 3), 8)
         << pad(csv::format_fixed(r.ci_low, 3), 10) << pad(csv::format_fixed(r.ci_high, 3), 10)
         << "\n";
    }
    return os.str();
  }

  std::string to_csv() const {
    csv::Writer w({"term", "coef", "std_err", "t", "p", "ci_low", "ci_high"});
    for (const auto& r : rows)
      w.row({r.name, csv::format_number(r.coef), csv::format_number(r.std_err),
             csv::format_number(r.t), csv::format_number(r.p), csv::format_number(r.ci_low),
             csv::format_number(r.ci_high)});
    return w.str();
  }
};

// OLS with intercept and homoskedastic standard errors on the given columns.
inline OlsAttributionReport ols_report(const Matrix& X, const Vector& y,
                                       const std::vector<std::string>& names) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  require(n > p + 1, ErrorKind::invalid_argument, "ols_report: not enough rows for inference");
  Matrix Z(X.rows(), X.cols() + 1);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;
  Eigen::ColPivHouseholderQR<Matrix> qr(Z);
  if (qr.rank() < Z.cols()) fail(ErrorKind::numeric, "ols_report: collinear selected features");
  const Vector coef = qr.solve(y);
  const Vector resid = y - Z * coef;
  const double sse = resid.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  OlsAttributionReport rep;
  rep.n = n;
  rep.df_resid = n - p - 1;
  const double sigma2 = sse / static_cast<double>(rep.df_resid);
  const Matrix cov = sigma2 * (Z.transpose() * Z).inverse();
  rep.r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
  rep.adj_r2 = 1.0 - (1.0 - rep.r2) * static_cast<double>(n - 1) / static_cast<double>(rep.df_resid);
  rep.f_stat = p > 0 && rep.r2 < 1 ? (rep.r2 / static_cast<double>(p)) /
                                         ((1.0 - rep.r2) / static_cast<double>(rep.df_resid))
                                   : std::numeric_limits<double>::infinity();
  boost::math::students_t dist(static_cast<double>(rep.df_resid));
  const double tcrit = boost::math::quantile(boost::math::complement(dist, 0.025));
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    CoefficientRow r;
    r.name = k == 0 ? "const" : names[static_cast<std::size_t>(k - 1)];
    r.coef = coef(k);
    r.std_err = std::sqrt(std::max(0.0, cov(k, k)));
    if (r.std_err > 0) {
      r.t = r.coef / r.std_err;
      r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    } else {
      r.t = r.coef == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.coef);
      r.p = r.coef == 0 ? 1.0 : 0.0;
    }
    r.ci_low = r.coef - tcrit * r.std_err;
    r.ci_high = r.coef + tcrit * r.std_err;
    rep.rows.push_back(r);
  }
  return rep;
}

struct AttributionOptions {
  std::size_t top_k = 10;
  int k_folds = 5;
  std::uint64_t seed = 0;
  std::set<std::string> excluded_sources = {"artist", "house"};
};

inline OlsAttributionReport lasso_then_ols(const features::FeatureMatrix& m, const Vector& y,
                                           const AttributionOptions& opt = {}) {
  const auto candidates = features::drop_sources(m, opt.excluded_sources);
  require(candidates.cols() > 0, ErrorKind::invalid_argument, "lasso_then_ols: no candidate columns");
  const auto cv = fit_lasso_cv(candidates.values, y, {}, opt.k_folds, opt.seed, candidates.column_names);
  auto support = cv.fit.support();
  if (support.empty()) fail(ErrorKind::data, "lasso_then_ols: lasso selected no features");
  std::stable_sort(support.begin(), support.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(cv.fit.beta(static_cast<Eigen::Index>(a))) >
           std::abs(cv.fit.beta(static_cast<Eigen::Index>(b)));
  });
  if (support.size() > opt.top_k) support.resize(opt.top_k);
  std::vector<std::string> names;
  for (auto j : support) names.push_back(candidates.column_names[j]);
  auto rep = ols_report(features::select_columns(candidates, support).values, y, names);
  rep.lasso_lambda = cv.fit.lambda;
  for (auto j : cv.fit.support()) rep.lasso_support.push_back(candidates.column_names[j]);
  return rep;
}

}  // namespace artval::linmod

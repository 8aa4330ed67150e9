#pragma once

// Second-order gradient-boosted regression/classification trees with exact
// greedy split enumeration, gain importance and path-dependent TreeSHAP.

#include "artval/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace artval::boosting {

enum class Loss { squared, logistic };

inline std::string to_string(Loss l) { return l == Loss::squared ? "squared" : "logistic"; }

struct Params {
  int max_depth = 6;
  double eta = 0.1;
  int rounds = 400;
  double min_child_weight = 1.0;
  double subsample = 0.8;
  double colsample = 1.0;
  double lambda = 1.0;
  double gamma = 0.0;
  Loss loss = Loss::squared;
  std::uint64_t seed = 0;
  // Margin-scale intercept; defaults to mean(y) (squared) or logit(mean(y)).
  std::optional<double> base_score;

  void validate() const {
    require(max_depth >= 0, ErrorKind::invalid_argument, "boost: max_depth must be >= 0");
    require(eta > 0, ErrorKind::invalid_argument, "boost: eta must be positive");
    require(rounds >= 0, ErrorKind::invalid_argument, "boost: rounds must be >= 0");
    require(subsample > 0 && subsample <= 1, ErrorKind::invalid_argument, "boost: subsample in (0,1]");
    require(colsample > 0 && colsample <= 1, ErrorKind::invalid_argument, "boost: colsample in (0,1]");
    require(lambda >= 0 && gamma >= 0 && min_child_weight >= 0, ErrorKind::invalid_argument,
            "boost: lambda, gamma, min_child_weight must be nonnegative");
  }
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double leaf_value = 0;
  double cover = 0;  // hessian sum
  double gain = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<Node> nodes;

  template <class Row>
  int leaf_index(const Row& x) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(k)];
      k = x(n.feature) < n.threshold ? n.left : n.right;
    }
    return k;
  }

  template <class Row>
  double predict(const Row& x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].leaf_value;
  }

  // Cover-weighted mean of leaf values below `k`.
  double expected_value(int k = 0) const {
    const auto& n = nodes[static_cast<std::size_t>(k)];
    if (n.is_leaf()) return n.leaf_value;
    const auto& l = nodes[static_cast<std::size_t>(n.left)];
    const auto& r = nodes[static_cast<std::size_t>(n.right)];
    return (l.cover * expected_value(n.left) + r.cover * expected_value(n.right)) / n.cover;
  }
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct BoostModel {
  std::vector<Tree> trees;
  double eta = 0.1;
  double base_score = 0;
  Loss loss = Loss::squared;
  Params params;
  int n_features = 0;
  std::vector<std::string> feature_names;

  void check_width(const Matrix& X) const {
    if (X.cols() != n_features)
      fail(ErrorKind::invalid_argument, "boost: expected " + std::to_string(n_features) +
                                            " features, got " + std::to_string(X.cols()));
  }

  Vector predict_margin(const Matrix& X) const {
    check_width(X);
    Vector out = Vector::Constant(X.rows(), base_score);
    for (const auto& t : trees)
      for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) += eta * t.predict(X.row(i));
    return out;
  }

  // Log price for squared loss, probability for logistic loss.
  Vector predict(const Matrix& X) const {
    Vector m = predict_margin(X);
    if (loss == Loss::logistic) m = m.unaryExpr([](double z) { return sigmoid(z); });
    return m;
  }

  double expected_margin() const {
    double e = base_score;
    for (const auto& t : trees) e += eta * t.expected_value();
    return e;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "artval-boost";
    j["version"] = 1;
    j["loss"] = to_string(loss);
    j["eta"] = eta;
    j["base_score"] = base_score;
    j["n_features"] = n_features;
    j["feature_names"] = feature_names;
    j["params"] = {{"max_depth", params.max_depth},   {"rounds", params.rounds},
                   {"min_child_weight", params.min_child_weight},
                   {"subsample", params.subsample},   {"colsample", params.colsample},
                   {"lambda", params.lambda},         {"gamma", params.gamma},
                   {"seed", params.seed}};
    auto& ts = j["trees"] = nlohmann::json::array();
    for (const auto& t : trees) {
      std::vector<int> feature, left, right;
      std::vector<double> threshold, leaf, cover, gain;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        left.push_back(n.left);
        right.push_back(n.right);
        threshold.push_back(n.threshold);
        leaf.push_back(n.leaf_value);
        cover.push_back(n.cover);
        gain.push_back(n.gain);
      }
      ts.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                    {"right", right}, {"leaf_value", leaf}, {"cover", cover}, {"gain", gain}});
    }
    return j;
  }

  static BoostModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "artval-boost" || j.value("version", 0) != 1)
      fail(ErrorKind::schema, "boost model document: unsupported format or version");
    BoostModel m;
    m.loss = j.at("loss").get<std::string>() == "logistic" ? Loss::logistic : Loss::squared;
    m.eta = j.at("eta").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.n_features = j.at("n_features").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    m.params.eta = m.eta;
    m.params.loss = m.loss;
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.rounds = p.at("rounds").get<int>();
    m.params.min_child_weight = p.at("min_child_weight").get<double>();
    m.params.subsample = p.at("subsample").get<double>();
    m.params.colsample = p.at("colsample").get<double>();
    m.params.lambda = p.at("lambda").get<double>();
    m.params.gamma = p.at("gamma").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto leaf = tj.at("leaf_value").get<std::vector<double>>();
      const auto cover = tj.at("cover").get<std::vector<double>>();
      const auto gain = tj.at("gain").get<std::vector<double>>();
      for (std::size_t k = 0; k < feature.size(); ++k)
        t.nodes.push_back({feature[k], threshold[k], left[k], right[k], leaf[k], cover[k], gain[k]});
      m.trees.push_back(std::move(t));
    }
    return m;
  }
};

inline double training_loss(Loss loss, const Vector& margin, const Vector& y) {
  if (loss == Loss::squared) return (margin - y).squaredNorm() / static_cast<double>(y.size());
  double total = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double z = margin(i);
    // log(1 + e^z) - y z, computed stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - y(i) * z;
  }
  return total / static_cast<double>(y.size());
}

namespace detail {

struct SplitCandidate {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
};

inline double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

}  // namespace detail

struct FitTrace {
  std::vector<double> train_loss;  // full-data loss after each round
};

inline BoostModel fit_boost(const Matrix& X, const Vector& y, const Params& params,
                            std::vector<std::string> feature_names = {}, FitTrace* trace = nullptr) {
  params.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<int>(X.cols());
  require(static_cast<Eigen::Index>(n) == y.size(), ErrorKind::invalid_argument, "boost: X/y row mismatch");
  require(n > 0, ErrorKind::data, "boost: zero usable rows");
  require(y.allFinite(), ErrorKind::data, "boost: non-finite target");
  if (params.loss == Loss::logistic)
    for (Eigen::Index i = 0; i < y.size(); ++i)
      require(y(i) == 0.0 || y(i) == 1.0, ErrorKind::data, "boost: logistic targets must be 0/1");
  if (feature_names.empty())
    for (int j = 0; j < d; ++j) feature_names.push_back("f" + std::to_string(j));

  BoostModel model;
  model.eta = params.eta;
  model.loss = params.loss;
  model.params = params;
  model.n_features = d;
  model.feature_names = std::move(feature_names);
  if (params.base_score) {
    model.base_score = *params.base_score;
  } else if (params.loss == Loss::squared) {
    model.base_score = y.mean();
  } else {
    const double p = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(p / (1.0 - p));
  }

  // Presorted row order per feature (stable on ties).
  std::vector<std::vector<int>> sorted(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) {
    auto& s = sorted[static_cast<std::size_t>(f)];
    s.resize(n);
    std::iota(s.begin(), s.end(), 0);
    std::stable_sort(s.begin(), s.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
  }

  Rng rng(mix_seed(params.seed, 0xB0057));
  Vector margin = Vector::Constant(static_cast<Eigen::Index>(n), model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<int> node_of_row(n);
  const auto sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
  const auto feature_count =
      std::max<int>(1, static_cast<int>(std::lround(params.colsample * d)));
  constexpr double kMinGain = 1e-10;

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (params.loss == Loss::squared) {
        grad[i] = margin(ii) - y(ii);
        hess[i] = 1.0;
      } else {
        const double p = sigmoid(margin(ii));
        grad[i] = p - y(ii);
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      }
    }
    std::fill(node_of_row.begin(), node_of_row.end(), -1);
    if (sample_size < n) {
      auto perm = permutation(n, rng);
      for (std::size_t k = 0; k < sample_size; ++k) node_of_row[perm[k]] = 0;
    } else {
      std::fill(node_of_row.begin(), node_of_row.end(), 0);
    }
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    if (feature_count < d) {
      shuffle(features.begin(), features.end(), rng);
      features.resize(static_cast<std::size_t>(feature_count));
      std::sort(features.begin(), features.end());
    }

    Tree tree;
    std::vector<double> G(1, 0.0), H(1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (node_of_row[i] == 0) {
        G[0] += grad[i];
        H[0] += hess[i];
      }
    tree.nodes.push_back({});
    tree.nodes[0].cover = H[0];
    std::vector<int> frontier = {0};

    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
      const std::size_t slots = tree.nodes.size();
      std::vector<char> active(slots, 0);
      for (int k : frontier) active[static_cast<std::size_t>(k)] = 1;
      std::vector<detail::SplitCandidate> best(slots);
      std::vector<double> GL(slots), HL(slots), last(slots);
      std::vector<char> seen(slots);
      for (int f : features) {
        std::fill(GL.begin(), GL.end(), 0.0);
        std::fill(HL.begin(), HL.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        for (int r : sorted[static_cast<std::size_t>(f)]) {
          const int k = node_of_row[static_cast<std::size_t>(r)];
          if (k < 0 || !active[static_cast<std::size_t>(k)]) continue;
          const auto ks = static_cast<std::size_t>(k);
          const double v = X(r, f);
          if (seen[ks] && v != last[ks]) {
            const double gl = GL[ks], hl = HL[ks];
            const double gr = G[ks] - gl, hr = H[ks] - hl;
            if (hl >= params.min_child_weight && hr >= params.min_child_weight) {
              const double gain =
                  0.5 * (detail::leaf_score(gl, hl, params.lambda) +
                         detail::leaf_score(gr, hr, params.lambda) -
                         detail::leaf_score(G[ks], H[ks], params.lambda)) -
                  params.gamma;
              if (gain > best[ks].gain + kMinGain * std::max(1.0, best[ks].gain)) {
                double thr = last[ks] + 0.5 * (v - last[ks]);
                if (!(last[ks] < thr && thr <= v)) thr = v;
                best[ks] = {gain, f, thr};
              }
            }
          }
          GL[ks] += grad[static_cast<std::size_t>(r)];
          HL[ks] += hess[static_cast<std::size_t>(r)];
          last[ks] = v;
          seen[ks] = 1;
        }
      }
      std::vector<int> next;
      std::vector<int> left_of(slots, -1);
      for (int k : frontier) {
        const auto ks = static_cast<std::size_t>(k);
        if (best[ks].feature < 0) continue;
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& nd = tree.nodes[ks];
        nd.feature = best[ks].feature;
        nd.threshold = best[ks].threshold;
        nd.gain = best[ks].gain;
        nd.left = l;
        nd.right = l + 1;
        left_of[ks] = l;
        next.push_back(l);
        next.push_back(l + 1);
      }
      G.resize(tree.nodes.size(), 0.0);
      H.resize(tree.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const int k = node_of_row[i];
        if (k < 0 || k >= static_cast<int>(slots) || left_of[static_cast<std::size_t>(k)] < 0) continue;
        const auto& nd = tree.nodes[static_cast<std::size_t>(k)];
        const int child = X(static_cast<Eigen::Index>(i), nd.feature) < nd.threshold ? nd.left : nd.right;
        node_of_row[i] = child;
        G[static_cast<std::size_t>(child)] += grad[i];
        H[static_cast<std::size_t>(child)] += hess[i];
      }
      for (int c : next) tree.nodes[static_cast<std::size_t>(c)].cover = H[static_cast<std::size_t>(c)];
      frontier = std::move(next);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].is_leaf()) tree.nodes[k].leaf_value = -G[k] / (H[k] + params.lambda);

    if (tree.nodes.size() == 1 && std::abs(params.eta * tree.nodes[0].leaf_value) < 1e-12) break;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
      margin(i) += params.eta * tree.predict(X.row(i));
    model.trees.push_back(std::move(tree));
    if (trace) trace->train_loss.push_back(training_loss(params.loss, margin, y));
  }
  return model;
}

struct GainEntry {
  double total = 0;
  double mean = 0;
  int splits = 0;
};

// Features that never split are absent from the map.
inline std::map<int, GainEntry> gain_importance(const BoostModel& model) {
  std::map<int, GainEntry> out;
  for (const auto& t : model.trees)
    for (const auto& n : t.nodes)
      if (!n.is_leaf()) {
        auto& e = out[n.feature];
        e.total += n.gain;
        ++e.splits;
      }
  for (auto& [f, e] : out) e.mean = e.total / e.splits;
  return out;
}

// ---------------------------------------------------------------------------
// Path-dependent TreeSHAP.

namespace detail {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double weight = 0;
};

inline void extend_path(std::vector<PathElement>& path, int depth, double zero_fraction,
                        double one_fraction, int feature) {
  auto* m = path.data();
  m[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    m[i + 1].weight += one_fraction * m[i].weight * (i + 1) / static_cast<double>(depth + 1);
    m[i].weight = zero_fraction * m[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

inline void unwind_path(std::vector<PathElement>& path, int depth, int index) {
  auto* m = path.data();
  const double one = m[index].one_fraction;
  const double zero = m[index].zero_fraction;
  double next = m[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = m[i].weight;
      m[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - m[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      m[i].weight = m[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    m[i].feature = m[i + 1].feature;
    m[i].zero_fraction = m[i + 1].zero_fraction;
    m[i].one_fraction = m[i + 1].one_fraction;
  }
}

inline double unwound_path_sum(const std::vector<PathElement>& path, int depth, int index) {
  const auto* m = path.data();
  const double one = m[index].one_fraction;
  const double zero = m[index].zero_fraction;
  double next = m[depth].weight;
  double total = 0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = m[i].weight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      total += (m[i].weight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

template <class Row>
void tree_shap_recurse(const Tree& tree, const Row& x, Vector& phi, int node,
                       std::vector<PathElement> path, int depth, double zero_fraction,
                       double one_fraction, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  extend_path(path, depth, zero_fraction, one_fraction, feature);
  const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
  if (nd.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const auto& el = path[static_cast<std::size_t>(i)];
      phi(el.feature) += w * (el.one_fraction - el.zero_fraction) * nd.leaf_value;
    }
    return;
  }
  const int hot = x(nd.feature) < nd.threshold ? nd.left : nd.right;
  const int cold = hot == nd.left ? nd.right : nd.left;
  double incoming_zero = 1, incoming_one = 1;
  int k = 1;
  for (; k <= depth; ++k)
    if (path[static_cast<std::size_t>(k)].feature == nd.feature) break;
  if (k <= depth) {
    incoming_zero = path[static_cast<std::size_t>(k)].zero_fraction;
    incoming_one = path[static_cast<std::size_t>(k)].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }
  const double cover = nd.cover;
  tree_shap_recurse(tree, x, phi, hot, path, depth + 1,
                    incoming_zero * tree.nodes[static_cast<std::size_t>(hot)].cover / cover,
                    incoming_one, nd.feature);
  tree_shap_recurse(tree, x, phi, cold, path, depth + 1,
                    incoming_zero * tree.nodes[static_cast<std::size_t>(cold)].cover / cover, 0.0,
                    nd.feature);
}

}  // namespace detail

// Contributions for a single tree (unscaled by eta).
template <class Row>
Vector tree_shap(const Tree& tree, const Row& x, int n_features) {
  Vector phi = Vector::Zero(n_features);
  std::vector<detail::PathElement> path;
  detail::tree_shap_recurse(tree, x, phi, 0, path, 0, 1.0, 1.0, -1);
  return phi;
}

struct ShapValues {
  Vector contributions;  // one per feature, margin scale
  double base_value = 0;
};

template <class Row>
ShapValues tree_shap(const BoostModel& model, const Row& x) {
  if (x.size() != model.n_features)
    fail(ErrorKind::invalid_argument, "tree_shap: expected " + std::to_string(model.n_features) +
                                          " features, got " + std::to_string(x.size()));
  ShapValues out;
  out.contributions = Vector::Zero(model.n_features);
  out.base_value = model.expected_margin();
  for (const auto& t : model.trees) out.contributions += model.eta * tree_shap(t, x, model.n_features);
  return out;
}

// Row-wise SHAP matrix (n x d) plus the shared base value.
inline std::pair<Matrix, double> shap_matrix(const BoostModel& model, const Matrix& X) {
  model.check_width(X);
  Matrix out(X.rows(), X.cols());
  double base = model.expected_margin();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector row = X.row(i).transpose();
    out.row(i) = tree_shap(model, row).contributions.transpose();
  }
  return {out, base};
}

}  // namespace artval::boosting

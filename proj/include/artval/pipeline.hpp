#pragma once

// Glue between the panel, the feature encoder and the model families: builds
// train/test designs from a panel and fits, applies and persists any of the
// supported price models.

#include "artval/boosting.hpp"
#include "artval/core.hpp"
#include "artval/embed.hpp"
#include "artval/eval.hpp"
#include "artval/featurize.hpp"
#include "artval/linmod.hpp"
#include "artval/net.hpp"
#include "artval/panel.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace artval::pipeline {

using features::FeatureMatrix;
using features::Group;

enum class Target { price, esterr };

inline Target parse_target(const std::string& s) {
  if (s == "price") return Target::price;
  if (s == "esterr") return Target::esterr;
  fail(ErrorKind::invalid_argument, "unknown target '" + s + "' (expected price or esterr)");
}
inline std::string to_string(Target t) { return t == Target::price ? "price" : "esterr"; }

struct DesignOptions {
  eval::YearRange train_years{1985, 2021};
  eval::YearRange test_years{2022, 2024};
  Target target = Target::price;
  std::set<Group> groups = {Group::object, Group::artist, Group::venue, Group::timing, Group::history};
  std::set<std::string> drop_sources;
  bool no_prev_price = false;  // keep only the has_prev indicator
  bool with_estimates = false;
  bool overpay = false;
  bool poly = false;
  panel::FilterOptions filter;

  features::EncoderOptions encoder_options() const {
    features::EncoderOptions e;
    e.groups = groups;
    if (with_estimates) e.groups.insert(Group::estimates);
    e.excluded_sources = drop_sources;
    if (!overpay) e.excluded_sources.insert("overpay");
    if (no_prev_price || target == Target::esterr) e.excluded_sources.insert("prev_price");
    if (target == Target::esterr) e.excluded_sources.insert("overpay");
    return e;
  }

  nlohmann::json to_json() const {
    std::vector<std::string> g;
    for (auto x : groups) g.push_back(features::to_string(x));
    return {{"train_years", train_years.str()}, {"test_years", test_years.str()},
            {"target", to_string(target)},      {"groups", g},
            {"drop_sources", drop_sources},     {"no_prev_price", no_prev_price},
            {"with_estimates", with_estimates}, {"overpay", overpay},
            {"poly", poly},                     {"min_price", filter.min_price},
            {"min_cat_count", filter.min_cat_count}};
  }

  static DesignOptions from_json(const nlohmann::json& j) {
    DesignOptions o;
    o.train_years = eval::YearRange::parse(j.at("train_years").get<std::string>());
    o.test_years = eval::YearRange::parse(j.at("test_years").get<std::string>());
    o.target = parse_target(j.at("target").get<std::string>());
    o.groups.clear();
    for (const auto& g : j.at("groups")) o.groups.insert(features::parse_group(g.get<std::string>()));
    o.drop_sources = j.at("drop_sources").get<std::set<std::string>>();
    o.no_prev_price = j.at("no_prev_price").get<bool>();
    o.with_estimates = j.at("with_estimates").get<bool>();
    o.overpay = j.at("overpay").get<bool>();
    o.poly = j.at("poly").get<bool>();
    o.filter.min_price = j.at("min_price").get<double>();
    o.filter.min_cat_count = j.at("min_cat_count").get<int>();
    return o;
  }
};

// Raw records to the filtered, imputed panel; the training window decides the
// category remapping.
inline std::vector<panel::PanelRow> prepare_panel(const std::vector<panel::TransactionRecord>& records,
                                                  int train_end_year, panel::FilterOptions filter = {}) {
  filter.train_end_year = train_end_year;
  auto rows = panel::impute_prev_price(panel::build_panel(records));
  return panel::apply_filters(rows, filter).rows;
}

struct Design {
  std::vector<panel::PanelRow> train_rows, test_rows;
  FeatureMatrix train, test;
  Vector y_train, y_test;
  Matrix img_train, img_test;  // empty without an embedding table
  features::Encoder encoder;

  bool has_image() const { return img_train.size() > 0; }
};

inline Vector target_values(const std::vector<panel::PanelRow>& rows, Target t) {
  return t == Target::price ? eval::log_prices(rows) : eval::estimation_error_target(rows);
}

inline std::vector<std::string> lot_ids(const std::vector<panel::PanelRow>& rows) {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) ids.push_back(r.lot_id);
  return ids;
}

inline FeatureMatrix finish_matrix(FeatureMatrix m, const DesignOptions& opt) {
  return opt.poly ? features::polynomial_expand(m) : m;
}

// Price models train on sold rows only.
inline Design make_design(const std::vector<panel::PanelRow>& panel_rows, const embed::EmbeddingTable* emb,
                          const DesignOptions& opt, const features::Encoder* encoder = nullptr) {
  auto split = eval::temporal_split(panel_rows, opt.train_years, opt.test_years);
  Design d;
  d.train_rows = eval::sold_only(split.train);
  d.test_rows = eval::sold_only(split.test);
  require(!d.train_rows.empty() && !d.test_rows.empty(), ErrorKind::data, "design: no sold rows in train or test");
  d.encoder = encoder ? *encoder : features::Encoder::fit(d.train_rows, opt.encoder_options());
  d.train = finish_matrix(d.encoder.transform(d.train_rows), opt);
  d.test = finish_matrix(d.encoder.transform(d.test_rows), opt);
  d.y_train = target_values(d.train_rows, opt.target);
  d.y_test = target_values(d.test_rows, opt.target);
  if (emb) {
    d.img_train = emb->rows(lot_ids(d.train_rows));
    d.img_test = emb->rows(lot_ids(d.test_rows));
  }
  return d;
}

inline std::pair<Vector, Vector> estimate_bounds(const std::vector<panel::PanelRow>& rows) {
  Vector lo(static_cast<Eigen::Index>(rows.size())), hi(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].estimate_low || !rows[i].estimate_high)
      fail(ErrorKind::data, "row " + rows[i].lot_id + " has no presale estimate");
    lo(static_cast<Eigen::Index>(i)) = *rows[i].estimate_low;
    hi(static_cast<Eigen::Index>(i)) = *rows[i].estimate_high;
  }
  return {lo, hi};
}

// Sold (1) vs unsold (0) over every row in the train and test windows, split
// at random within each class. opt.target is ignored.
inline Design make_classification_design(const std::vector<panel::PanelRow>& panel_rows,
                                         const embed::EmbeddingTable* emb, const DesignOptions& opt,
                                         double test_fraction, std::uint64_t seed) {
  std::vector<panel::PanelRow> rows;
  for (const auto& r : panel_rows)
    if (opt.train_years.contains(r.sale_year) || opt.test_years.contains(r.sale_year)) rows.push_back(r);
  require(rows.size() >= 4, ErrorKind::data, "classification design: too few rows");
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto& r : rows) labels.push_back(r.sold ? 1 : 0);
  const auto split = eval::stratified_split(labels, test_fraction, seed);
  Design d;
  for (auto i : split.first) d.train_rows.push_back(rows[i]);
  for (auto i : split.second) d.test_rows.push_back(rows[i]);
  auto enc_opt = opt.encoder_options();
  enc_opt.excluded_sources.insert("overpay");
  d.encoder = features::Encoder::fit(d.train_rows, enc_opt);
  d.train = finish_matrix(d.encoder.transform(d.train_rows), opt);
  d.test = finish_matrix(d.encoder.transform(d.test_rows), opt);
  auto label_vec = [](const std::vector<panel::PanelRow>& rs) {
    Vector v(static_cast<Eigen::Index>(rs.size()));
    for (std::size_t i = 0; i < rs.size(); ++i) v(static_cast<Eigen::Index>(i)) = rs[i].sold ? 1.0 : 0.0;
    return v;
  };
  d.y_train = label_vec(d.train_rows);
  d.y_test = label_vec(d.test_rows);
  if (emb) {
    d.img_train = emb->rows(lot_ids(d.train_rows));
    d.img_test = emb->rows(lot_ids(d.test_rows));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Models

enum class ModelKind { hedonic, ridge, lasso, boost, net, mmnet };

inline ModelKind parse_model(const std::string& s) {
  if (s == "hedonic") return ModelKind::hedonic;
  if (s == "ridge") return ModelKind::ridge;
  if (s == "lasso") return ModelKind::lasso;
  if (s == "boost") return ModelKind::boost;
  if (s == "net") return ModelKind::net;
  if (s == "mmnet") return ModelKind::mmnet;
  fail(ErrorKind::invalid_argument, "unknown model '" + s + "'");
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::hedonic: return "hedonic";
    case ModelKind::ridge: return "ridge";
    case ModelKind::lasso: return "lasso";
    case ModelKind::boost: return "boost";
    case ModelKind::net: return "net";
    case ModelKind::mmnet: return "mmnet";
  }
  return "?";
}

struct ModelSpec {
  ModelKind kind = ModelKind::boost;
  std::vector<double> ridge_grid = {0.01, 0.1, 1, 10, 100, 1000};
  int cv_folds = 5;
  boosting::Params boost;
  nn::TrainConfig net;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"kind", to_string(kind)},
            {"ridge_grid", ridge_grid},
            {"cv_folds", cv_folds},
            {"boost",
             {{"max_depth", boost.max_depth}, {"eta", boost.eta}, {"rounds", boost.rounds},
              {"min_child_weight", boost.min_child_weight}, {"subsample", boost.subsample},
              {"colsample", boost.colsample}, {"lambda", boost.lambda}, {"gamma", boost.gamma}}},
            {"net", net.to_json()},
            {"seed", seed}};
  }
};

inline double ridge_cv_lambda(const Matrix& X, const Vector& y, const std::vector<double>& grid, int k,
                              std::uint64_t seed) {
  require(!grid.empty(), ErrorKind::invalid_argument, "ridge: empty lambda grid");
  const auto fold = linmod::fold_assignment(static_cast<std::size_t>(X.rows()), k, seed);
  std::vector<double> err(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    const Matrix Xtr = gather_rows(X, tr), Xte = gather_rows(X, te);
    const Vector ytr = gather(y, tr), yte = gather(y, te);
    for (std::size_t g = 0; g < grid.size(); ++g)
      err[g] += (yte - linmod::fit_ridge(Xtr, ytr, grid[g]).predict(Xte)).squaredNorm();
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (err[g] < err[best]) best = g;
  return grid[best];
}

class Model {
 public:
  ModelKind kind() const { return kind_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::optional<linmod::LinearFit>& linear() const { return linear_; }
  const std::optional<boosting::BoostModel>& boost() const { return boost_; }
  nn::MultiModalNet<float>* net() { return net_ ? &*net_ : nullptr; }
  const nn::TrainResult& train_result() const { return train_result_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  static Model fit(const ModelSpec& spec, const FeatureMatrix& X, const Vector& y, const Matrix* img,
                   const std::vector<int>& years, nn::Task task = nn::Task::regression) {
    Model m;
    m.kind_ = spec.kind;
    m.columns_ = X.column_names;
    switch (spec.kind) {
      case ModelKind::hedonic: {
        linmod::OlsOptions o;
        o.allow_pseudo_inverse = true;
        m.linear_ = linmod::fit_ols(X.values, y, X.column_names, o);
        break;
      }
      case ModelKind::ridge: {
        const double lambda = ridge_cv_lambda(X.values, y, spec.ridge_grid, spec.cv_folds, spec.seed);
        m.linear_ = linmod::fit_ridge(X.values, y, lambda, X.column_names);
        break;
      }
      case ModelKind::lasso: {
        auto cv = linmod::fit_lasso_cv(X.values, y, {}, spec.cv_folds, spec.seed, X.column_names);
        m.warnings_ = cv.warnings;
        m.linear_ = cv.fit;
        break;
      }
      case ModelKind::boost: {
        auto p = spec.boost;
        p.seed = spec.seed;
        if (task == nn::Task::classification) p.loss = boosting::Loss::logistic;
        m.boost_ = boosting::fit_boost(X.values, y, p, X.column_names);
        break;
      }
      case ModelKind::net:
      case ModelKind::mmnet: {
        const bool image = spec.kind == ModelKind::mmnet;
        require(!image || (img && img->size() > 0), ErrorKind::invalid_argument,
                "mmnet requires an embedding table");
        auto tc = spec.net;
        tc.seed = spec.seed;
        if (task == nn::Task::classification) tc.loss = nn::LossKind::bce;
        const auto cfg = nn::make_config<float>(tc, static_cast<int>(X.cols()),
                                                image ? static_cast<int>(img->cols()) : 0, task);
        m.net_.emplace(cfg);
        auto data = nn::make_net_data<float>(X.values, image ? img : nullptr, y, years);
        m.train_result_ = nn::train(*m.net_, data, tc);
        break;
      }
    }
    return m;
  }

  Vector predict(const Matrix& X, const Matrix* img) {
    require(X.cols() == static_cast<Eigen::Index>(columns_.size()), ErrorKind::schema,
            "model expects " + std::to_string(columns_.size()) + " feature columns, got " + std::to_string(X.cols()));
    if (linear_) return linear_->predict(X);
    if (boost_) return boost_->predict(X);
    const Matrix* image = net_->config().has_image() ? img : nullptr;
    require(!net_->config().has_image() || (img && img->size() > 0), ErrorKind::invalid_argument,
            "mmnet prediction requires embeddings");
    const nn::Mat<float> tab = X.transpose().cast<float>();
    if (image) {
      const nn::Mat<float> im = image->transpose().cast<float>();
      return nn::predict(*net_, tab, &im);
    }
    return nn::predict<float>(*net_, tab, nullptr);
  }

  // model.json always; model.mmnet holds network weights.
  void save(const std::string& dir) const {
    nlohmann::json j;
    j["format"] = "artval-model";
    j["version"] = 1;
    j["kind"] = to_string(kind_);
    j["columns"] = columns_;
    if (linear_) j["linear"] = linear_->to_json();
    if (boost_) j["boost"] = boost_->to_json();
    write_text(dir + "/model.json", j.dump(1) + "\n");
    if (net_) nn::save_checkpoint(const_cast<nn::MultiModalNet<float>&>(*net_), dir + "/model.mmnet");
  }

  static Model load(const std::string& dir) {
    const auto j = read_json(dir + "/model.json");
    if (j.value("format", "") != "artval-model" || j.value("version", 0) != 1)
      fail(ErrorKind::schema, dir + "/model.json: unsupported model document");
    Model m;
    m.kind_ = parse_model(j.at("kind").get<std::string>());
    m.columns_ = j.at("columns").get<std::vector<std::string>>();
    if (j.contains("linear")) m.linear_ = linmod::LinearFit::from_json(j.at("linear"));
    if (j.contains("boost")) m.boost_ = boosting::BoostModel::from_json(j.at("boost"));
    if (m.kind_ == ModelKind::net || m.kind_ == ModelKind::mmnet)
      m.net_.emplace(nn::load_checkpoint<float>(dir + "/model.mmnet"));
    return m;
  }

  static void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    out << text;
  }

  static nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::missing_artifact, "missing artifact " + path);
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::schema, path + ": " + e.what());
    }
  }

 private:
  ModelKind kind_ = ModelKind::boost;
  std::vector<std::string> columns_;
  std::optional<linmod::LinearFit> linear_;
  std::optional<boosting::BoostModel> boost_;
  std::optional<nn::MultiModalNet<float>> net_;
  nn::TrainResult train_result_;
  std::vector<std::string> warnings_;
};

inline std::vector<int> years_of(const std::vector<panel::PanelRow>& rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.sale_year);
  return y;
}

inline Model fit_model(const ModelSpec& spec, const Design& d) {
  return Model::fit(spec, d.train, d.y_train, d.has_image() ? &d.img_train : nullptr, years_of(d.train_rows));
}

inline Vector predict_test(Model& m, const Design& d) {
  return m.predict(d.test.values, d.has_image() ? &d.img_test : nullptr);
}

inline eval::EvalReport evaluate(Model& m, const Design& d, const DesignOptions& opt) {
  return eval::stratified_report(to_string(m.kind()), d.y_test, predict_test(m, d), eval::fresh_flags(d.test_rows),
                                 to_string(opt.target));
}

// Permutation blocks per source variable, plus one block for the image
// embedding when `image_offset` is set (image columns appended after X).
inline std::vector<eval::Block> permutation_blocks(const FeatureMatrix& X, std::optional<Eigen::Index> image_offset = {},
                                                   Eigen::Index image_cols = 0) {
  std::vector<eval::Block> blocks;
  for (auto& [src, cols] : X.blocks()) blocks.push_back({src, cols});
  if (image_offset) {
    eval::Block img{"image", {}};
    for (Eigen::Index k = 0; k < image_cols; ++k) img.second.push_back(static_cast<std::size_t>(*image_offset + k));
    blocks.push_back(img);
  }
  return blocks;
}

// Predictor over [X | image] so the image block can be permuted like any other.
inline eval::Predictor joint_predictor(Model& m, Eigen::Index n_tab) {
  return [&m, n_tab](const Matrix& Z) {
    if (Z.cols() == n_tab) return m.predict(Z, nullptr);
    const Matrix img = Z.rightCols(Z.cols() - n_tab);
    return m.predict(Z.leftCols(n_tab), &img);
  };
}

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  if (b.size() == 0) return a;
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace artval::pipeline

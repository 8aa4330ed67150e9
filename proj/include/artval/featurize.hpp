#pragma once

// Design-matrix construction: one-hot encoding with a dropped reference level,
// train-only standardization, degree-2 expansion and feature-group selection.

#include "artval/core.hpp"
#include "artval/panel.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace artval::features {

enum class Group { object, artist, venue, timing, history, estimates };

inline const std::vector<Group>& all_groups() {
  static const std::vector<Group> g = {Group::object, Group::artist,  Group::venue,
                                       Group::timing, Group::history, Group::estimates};
  return g;
}

inline std::string to_string(Group g) {
  switch (g) {
    case Group::object: return "object";
    case Group::artist: return "artist";
    case Group::venue: return "venue";
    case Group::timing: return "timing";
    case Group::history: return "history";
    case Group::estimates: return "estimates";
  }
  return "?";
}

inline Group parse_group(const std::string& s) {
  for (auto g : all_groups())
    if (to_string(g) == s) return g;
  fail(ErrorKind::invalid_argument, "unknown feature group '" + s + "'");
}

enum class Kind { numeric, boolean, categorical };

struct SourceSpec {
  std::string name;
  Group group;
  Kind kind;
};

// Source fields and the group each belongs to.
inline const std::vector<SourceSpec>& source_specs() {
  static const std::vector<SourceSpec> s = {
      {"height", Group::object, Kind::numeric},
      {"width", Group::object, Kind::numeric},
      {"shape", Group::object, Kind::categorical},
      {"medium", Group::object, Kind::categorical},
      {"n_citations", Group::object, Kind::numeric},
      {"n_exhibitions", Group::object, Kind::numeric},
      {"signed", Group::object, Kind::boolean},
      {"dated", Group::object, Kind::boolean},
      {"category", Group::object, Kind::categorical},
      {"artist", Group::artist, Kind::categorical},
      {"house", Group::venue, Kind::categorical},
      {"location", Group::venue, Kind::categorical},
      {"sale_year", Group::timing, Kind::numeric},
      {"sale_month", Group::timing, Kind::categorical},
      {"has_prev", Group::history, Kind::boolean},
      {"prev_price", Group::history, Kind::numeric},
      {"overpay", Group::history, Kind::numeric},
      {"estimate_low", Group::estimates, Kind::numeric},
      {"estimate_high", Group::estimates, Kind::numeric},
  };
  return s;
}

inline const SourceSpec& source_spec(const std::string& name) {
  for (const auto& s : source_specs())
    if (s.name == name) return s;
  fail(ErrorKind::invalid_argument, "unknown source field '" + name + "'");
}

struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> column_names;
  std::vector<Group> groups;
  std::vector<std::string> sources;
  std::vector<bool> indicator;  // 0/1 columns, never standardized or expanded

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  // Column indices per source field, in first-appearance order.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> blocks() const {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    for (std::size_t j = 0; j < sources.size(); ++j) {
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const auto& b) { return b.first == sources[j]; });
      if (it == out.end()) {
        out.push_back({sources[j], {j}});
      } else {
        it->second.push_back(j);
      }
    }
    return out;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j)
      if (column_names[j] == name) return j;
    return std::nullopt;
  }
};

struct EncoderOptions {
  std::set<Group> groups = {Group::object, Group::artist, Group::venue, Group::timing,
                            Group::history};
  std::set<std::string> excluded_sources = {"overpay"};
};

// Raw value of a numeric or boolean source before scaling. Returns nullopt
// when the field is absent on the row.
inline std::optional<double> raw_value(const panel::PanelRow& r, const std::string& source) {
  if (source == "height") return r.height;
  if (source == "width") return r.width;
  if (source == "n_citations") return r.n_citations;
  if (source == "n_exhibitions") return r.n_exhibitions;
  if (source == "signed") return r.signed_ ? 1.0 : 0.0;
  if (source == "dated") return r.dated ? 1.0 : 0.0;
  if (source == "sale_year") return r.sale_year;
  if (source == "has_prev") return r.has_prev ? 1.0 : 0.0;
  if (source == "prev_price") {
    if (!r.prev_price) return std::nullopt;
    return std::log1p(*r.prev_price);
  }
  if (source == "overpay") {
    if (!r.has_prev || !r.prev_price || !r.prev_estimate_mid) return 0.0;
    return std::log(*r.prev_price) - std::log(*r.prev_estimate_mid);
  }
  if (source == "estimate_low") {
    if (!r.estimate_low) return std::nullopt;
    return std::log(*r.estimate_low);
  }
  if (source == "estimate_high") {
    if (!r.estimate_high) return std::nullopt;
    return std::log(*r.estimate_high);
  }
  fail(ErrorKind::invalid_argument, "no numeric accessor for '" + source + "'");
}

inline std::string category_value(const panel::PanelRow& r, const std::string& source) {
  if (source == "sale_month") return std::to_string(r.sale_month);
  return panel::field_ref(r, source);
}

struct ColumnPlan {
  std::string source;
  Kind kind;
  Group group;
  std::string name;
  double mean = 0;  // numeric only
  double sd = 1;
  std::string level;  // categorical only
  // Standardized over rows with a previous sale; rows without one encode as 0.
  bool gated = false;
};

inline bool gated_source(const std::string& source) { return source == "prev_price"; }

class Encoder {
 public:
  static Encoder fit(const std::vector<panel::PanelRow>& train, const EncoderOptions& opt = {}) {
    require(!train.empty(), ErrorKind::invalid_argument, "fit_encoder: no training rows");
    Encoder enc;
    enc.options_ = opt;
    for (const auto& spec : source_specs()) {
      if (!opt.groups.count(spec.group) || opt.excluded_sources.count(spec.name)) continue;
      if (spec.kind == Kind::categorical) {
        std::set<std::string> levels;
        for (const auto& r : train) levels.insert(category_value(r, spec.name));
        std::vector<std::string> vocab(levels.begin(), levels.end());
        enc.vocab_[spec.name] = vocab;
        // first (lexicographically smallest) level is the reference
        for (std::size_t k = 1; k < vocab.size(); ++k)
          enc.plan_.push_back({spec.name, spec.kind, spec.group, spec.name + "=" + vocab[k], 0, 1,
                               vocab[k]});
        continue;
      }
      const bool gated = spec.kind == Kind::numeric && gated_source(spec.name);
      std::vector<double> vals;
      vals.reserve(train.size());
      for (const auto& r : train) {
        if (gated && !r.has_prev) continue;
        auto x = raw_value(r, spec.name);
        if (!x) fail(ErrorKind::data, "fit_encoder: row " + r.lot_id + " missing field " + spec.name);
        vals.push_back(*x);
      }
      if (vals.size() < 2) {
        enc.warnings_.push_back("dropped column '" + spec.name + "' with fewer than 2 observed values");
        continue;
      }
      const Vector v = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      const double sd = std::sqrt(sample_variance(v));
      if (!(sd > 0)) {
        enc.warnings_.push_back("dropped constant column '" + spec.name + "'");
        continue;
      }
      if (spec.kind == Kind::boolean) {
        enc.plan_.push_back({spec.name, spec.kind, spec.group, spec.name, 0, 1, {}});
      } else {
        enc.plan_.push_back({spec.name, spec.kind, spec.group, spec.name, v.mean(), sd, {}, gated});
      }
    }
    require(!enc.plan_.empty(), ErrorKind::invalid_argument, "fit_encoder: no usable columns");
    return enc;
  }

  FeatureMatrix transform(const std::vector<panel::PanelRow>& rows) const {
    FeatureMatrix m;
    const auto d = static_cast<Eigen::Index>(plan_.size());
    m.values = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
    for (const auto& c : plan_) {
      m.column_names.push_back(c.name);
      m.groups.push_back(c.group);
      m.sources.push_back(c.source);
      m.indicator.push_back(c.kind != Kind::numeric);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto& c = plan_[static_cast<std::size_t>(j)];
        if (c.kind == Kind::categorical) {
          m.values(ii, j) = category_value(rows[i], c.source) == c.level ? 1.0 : 0.0;
          continue;
        }
        if (c.gated && !rows[i].has_prev) continue;
        auto x = raw_value(rows[i], c.source);
        if (!x)
          fail(ErrorKind::data, "transform: row " + rows[i].lot_id + " missing field " + c.source);
        m.values(ii, j) = c.kind == Kind::numeric ? (*x - c.mean) / c.sd : *x;
      }
    }
    return m;
  }

  const std::vector<ColumnPlan>& columns() const { return plan_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const EncoderOptions& options() const { return options_; }
  const std::map<std::string, std::vector<std::string>>& vocabularies() const { return vocab_; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "artval-encoder";
    j["version"] = 1;
    std::vector<std::string> groups;
    for (auto g : options_.groups) groups.push_back(to_string(g));
    j["groups"] = groups;
    j["excluded_sources"] = options_.excluded_sources;
    j["vocabularies"] = vocab_;
    auto& cols = j["columns"] = nlohmann::json::array();
    for (const auto& c : plan_) {
      nlohmann::json cj{{"name", c.name}, {"source", c.source}, {"group", to_string(c.group)}};
      cj["kind"] = c.kind == Kind::numeric ? "numeric" : c.kind == Kind::boolean ? "boolean" : "categorical";
      if (c.kind == Kind::numeric) {
        cj["mean"] = c.mean;
        cj["sd"] = c.sd;
        if (c.gated) cj["gated"] = true;
      }
      if (c.kind == Kind::categorical) cj["level"] = c.level;
      cols.push_back(cj);
    }
    j["warnings"] = warnings_;
    return j;
  }

  static Encoder from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "artval-encoder" || j.value("version", 0) != 1)
      fail(ErrorKind::schema, "encoder document: unsupported format");
    Encoder enc;
    enc.options_.groups.clear();
    for (const auto& g : j.at("groups")) enc.options_.groups.insert(parse_group(g.get<std::string>()));
    enc.options_.excluded_sources = j.at("excluded_sources").get<std::set<std::string>>();
    enc.vocab_ = j.at("vocabularies").get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& cj : j.at("columns")) {
      ColumnPlan c;
      c.name = cj.at("name").get<std::string>();
      c.source = cj.at("source").get<std::string>();
      c.group = parse_group(cj.at("group").get<std::string>());
      const auto kind = cj.at("kind").get<std::string>();
      c.kind = kind == "numeric" ? Kind::numeric : kind == "boolean" ? Kind::boolean : Kind::categorical;
      if (c.kind == Kind::numeric) {
        c.mean = cj.at("mean").get<double>();
        c.sd = cj.at("sd").get<double>();
        c.gated = cj.value("gated", false);
      }
      if (c.kind == Kind::categorical) c.level = cj.at("level").get<std::string>();
      enc.plan_.push_back(c);
    }
    enc.warnings_ = j.value("warnings", std::vector<std::string>{});
    return enc;
  }

 private:
  EncoderOptions options_;
  std::vector<ColumnPlan> plan_;
  std::map<std::string, std::vector<std::string>> vocab_;
  std::vector<std::string> warnings_;
};

// Appends squares and pairwise products of the numeric (non-indicator)
// columns. Indicator columns are not expanded.
inline FeatureMatrix polynomial_expand(const FeatureMatrix& m, int degree = 2,
                                       std::size_t max_columns = 5000) {
  require(degree == 2, ErrorKind::invalid_argument, "polynomial_expand: only degree 2 is supported");
  std::vector<std::size_t> numeric;
  for (std::size_t j = 0; j < m.indicator.size(); ++j)
    if (!m.indicator[j]) numeric.push_back(j);
  const std::size_t k = numeric.size();
  const std::size_t extra = k * (k + 1) / 2;
  const std::size_t total = static_cast<std::size_t>(m.cols()) + extra;
  if (total > max_columns)
    fail(ErrorKind::invalid_argument,
         "polynomial_expand: " + std::to_string(total) + " columns exceeds cap of " +
             std::to_string(max_columns) + "; prune numeric features first");
  FeatureMatrix out = m;
  out.values.conservativeResize(m.rows(), static_cast<Eigen::Index>(total));
  auto col = m.cols();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      const auto ia = static_cast<Eigen::Index>(numeric[a]);
      const auto ib = static_cast<Eigen::Index>(numeric[b]);
      out.values.col(col) = m.values.col(ia).cwiseProduct(m.values.col(ib));
      out.column_names.push_back(m.column_names[numeric[a]] + "*" + m.column_names[numeric[b]]);
      out.groups.push_back(m.groups[numeric[a]]);
      out.sources.push_back(m.column_names[numeric[a]] + "*" + m.column_names[numeric[b]]);
      out.indicator.push_back(false);
      ++col;
    }
  }
  return out;
}

inline FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::size_t>& keep) {
  FeatureMatrix out;
  out.values.resize(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.values.col(static_cast<Eigen::Index>(k)) = m.values.col(static_cast<Eigen::Index>(keep[k]));
    out.column_names.push_back(m.column_names[keep[k]]);
    out.groups.push_back(m.groups[keep[k]]);
    out.sources.push_back(m.sources[keep[k]]);
    out.indicator.push_back(m.indicator[keep[k]]);
  }
  return out;
}

inline FeatureMatrix select_groups(const FeatureMatrix& m, const std::set<Group>& keep) {
  require(!keep.empty(), ErrorKind::invalid_argument, "select_groups: empty group set");
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < m.groups.size(); ++j)
    if (keep.count(m.groups[j])) idx.push_back(j);
  return select_columns(m, idx);
}

inline FeatureMatrix drop_sources(const FeatureMatrix& m, const std::set<std::string>& drop) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < m.sources.size(); ++j)
    if (!drop.count(m.sources[j])) idx.push_back(j);
  return select_columns(m, idx);
}

}  // namespace artval::features

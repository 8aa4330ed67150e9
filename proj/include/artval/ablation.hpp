#pragma once

// Feature-group ablation of the multi-modal network.

#include "artval/pipeline.hpp"

#include <string>
#include <vector>

namespace artval::ablation {

using features::Group;

struct AblationConfig {
  std::string name;
  std::set<Group> groups;
  std::set<std::string> drop_sources;
};

inline std::vector<AblationConfig> standard_configs() {
  const std::set<Group> all = {Group::object, Group::artist, Group::venue, Group::timing, Group::history};
  auto without = [&](Group g) {
    auto s = all;
    s.erase(g);
    return s;
  };
  return {
      {"baseline", all, {}},
      {"no_object", without(Group::object), {}},
      {"no_artist", without(Group::artist), {}},
      // artist, sale year and the previous-sale flag only
      {"minimal", {Group::artist, Group::timing, Group::history}, {"sale_month", "prev_price", "overpay"}},
  };
}

inline AblationConfig find_config(const std::string& name) {
  for (auto& c : standard_configs())
    if (c.name == name) return c;
  fail(ErrorKind::invalid_argument, "unknown ablation config '" + name + "'");
}

inline const std::vector<int>& standard_d_images() {
  static const std::vector<int> d = {10, 1000};
  return d;
}

struct AblationRow {
  std::string config;
  int d_image = 0;
  std::size_t n_train = 0;
  std::size_t n_columns = 0;
  eval::EvalReport report;
};

inline std::vector<AblationRow> ablation_run(const std::vector<panel::PanelRow>& rows, const embed::EmbeddingTable& emb,
                                             const pipeline::DesignOptions& base, const pipeline::ModelSpec& spec,
                                             const std::vector<AblationConfig>& configs,
                                             const std::vector<int>& d_images) {
  std::vector<AblationRow> out;
  for (const auto& c : configs) {
    auto opt = base;
    opt.groups = c.groups;
    opt.drop_sources.insert(c.drop_sources.begin(), c.drop_sources.end());
    const auto design = pipeline::make_design(rows, &emb, opt);
    for (int d : d_images) {
      auto s = spec;
      s.kind = pipeline::ModelKind::mmnet;
      s.net.d_image = d;
      auto model = pipeline::fit_model(s, design);
      AblationRow r;
      r.config = c.name;
      r.d_image = d;
      r.n_train = design.train_rows.size();
      r.n_columns = static_cast<std::size_t>(design.train.cols());
      r.report = pipeline::evaluate(model, design, opt);
      r.report.model = "mmnet:" + c.name + ":d" + std::to_string(d);
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  csv::Writer w({"config", "d_image", "n_train", "n_columns", "r2_all", "r2_previous", "r2_fresh"});
  for (const auto& r : rows)
    w.row({r.config, std::to_string(r.d_image), std::to_string(r.n_train), std::to_string(r.n_columns),
           csv::format_fixed(r.report.all.r2, 6), csv::format_fixed(r.report.previous.r2, 6),
           csv::format_fixed(r.report.fresh.r2, 6)});
  return w.str();
}

}  // namespace artval::ablation

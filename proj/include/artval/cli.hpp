#pragma once

// Command-line front end. Every subcommand writes into --out and leaves a
// run_config.json with the resolved settings and the build version.

#include "artval/ablation.hpp"
#include "artval/embed.hpp"
#include "artval/ensemble.hpp"
#include "artval/eval.hpp"
#include "artval/pipeline.hpp"
#include "artval/svg.hpp"
#include "artval/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef ARTVAL_VERSION
#define ARTVAL_VERSION "0.1.0-unknown"
#endif

namespace artval::cli {

inline std::string version() { return ARTVAL_VERSION; }

// Process exit codes.
enum ExitCode : int {
  ok = 0,
  other_error = 1,
  usage_error = 2,
  missing_artifact = 3,
  schema_error = 4,
  data_error = 5,
};

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return usage_error;
    case ErrorKind::missing_artifact: return missing_artifact;
    case ErrorKind::schema: return schema_error;
    case ErrorKind::data: return data_error;
    case ErrorKind::numeric:
    case ErrorKind::io: return other_error;
  }
  return other_error;
}

struct RunConfig {
  std::string command;
  std::string panel, embeddings, out, model_dir;
  std::uint64_t seed = 0;
  std::string model = "boost";
  int d_image = 100;
  std::string train_years = "1985:2021";
  std::string test_years = "2022:2024";
  bool no_prev_price = false;
  std::string target = "price";
  std::vector<std::string> groups;  // empty: every tabular group
  bool poly = false;
  bool with_estimates = false;
  bool overpay = false;
  int epochs = 0;  // 0: library default
  int rounds = 0;
  int repeats = 5;
  int folds = 5;
  std::vector<int> d_images;  // ablate: defaults to the standard pair
  std::string preset = "anchored";
  int n_rows = 0;  // 0: preset value
  std::string color_by = "category";

  nlohmann::json to_json() const {
    return {{"command", command},
            {"panel", panel},
            {"embeddings", embeddings},
            {"out", out},
            {"model_dir", model_dir},
            {"seed", seed},
            {"model", model},
            {"d_image", d_image},
            {"train_years", train_years},
            {"test_years", test_years},
            {"no_prev_price", no_prev_price},
            {"target", target},
            {"groups", groups},
            {"poly", poly},
            {"with_estimates", with_estimates},
            {"overpay", overpay},
            {"epochs", epochs},
            {"rounds", rounds},
            {"repeats", repeats},
            {"folds", folds},
            {"d_images", d_images},
            {"preset", preset},
            {"n_rows", n_rows},
            {"color_by", color_by}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.command = j.value("command", c.command);
    c.panel = j.value("panel", c.panel);
    c.embeddings = j.value("embeddings", c.embeddings);
    c.out = j.value("out", c.out);
    c.model_dir = j.value("model_dir", c.model_dir);
    c.seed = j.value("seed", c.seed);
    c.model = j.value("model", c.model);
    c.d_image = j.value("d_image", c.d_image);
    c.train_years = j.value("train_years", c.train_years);
    c.test_years = j.value("test_years", c.test_years);
    c.no_prev_price = j.value("no_prev_price", c.no_prev_price);
    c.target = j.value("target", c.target);
    c.groups = j.value("groups", c.groups);
    c.poly = j.value("poly", c.poly);
    c.with_estimates = j.value("with_estimates", c.with_estimates);
    c.overpay = j.value("overpay", c.overpay);
    c.epochs = j.value("epochs", c.epochs);
    c.rounds = j.value("rounds", c.rounds);
    c.repeats = j.value("repeats", c.repeats);
    c.folds = j.value("folds", c.folds);
    c.d_images = j.value("d_images", c.d_images);
    c.preset = j.value("preset", c.preset);
    c.n_rows = j.value("n_rows", c.n_rows);
    c.color_by = j.value("color_by", c.color_by);
    return c;
  }
};

// ---------------------------------------------------------------------------
// File helpers

inline void ensure_dir(const std::string& dir) {
  require(!dir.empty(), ErrorKind::invalid_argument, "--out is required");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir + ": " + ec.message());
}

inline void write_file(const std::string& path, const std::string& text) { pipeline::Model::write_text(path, text); }

inline void write_json(const std::string& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_run_config(const RunConfig& cfg) {
  write_json(cfg.out + "/run_config.json", {{"version", version()}, {"config", cfg.to_json()}});
}

inline std::string fixed(double v) { return csv::format_fixed(v, 6); }

// ---------------------------------------------------------------------------
// Inputs

inline pipeline::DesignOptions design_options(const RunConfig& c) {
  pipeline::DesignOptions o;
  o.train_years = eval::YearRange::parse(c.train_years);
  o.test_years = eval::YearRange::parse(c.test_years);
  require(!o.train_years.overlaps(o.test_years), ErrorKind::invalid_argument, "train and test years overlap");
  o.target = pipeline::parse_target(c.target);
  if (!c.groups.empty()) {
    o.groups.clear();
    for (const auto& g : c.groups) o.groups.insert(features::parse_group(g));
  }
  o.no_prev_price = c.no_prev_price;
  o.with_estimates = c.with_estimates;
  o.overpay = c.overpay;
  o.poly = c.poly;
  return o;
}

inline pipeline::ModelSpec model_spec(const RunConfig& c) {
  pipeline::ModelSpec s;
  s.kind = pipeline::parse_model(c.model);
  s.seed = c.seed;
  s.cv_folds = c.folds;
  s.net.d_image = c.d_image;
  if (c.epochs > 0) s.net.epochs = c.epochs;
  if (c.rounds > 0) s.boost.rounds = c.rounds;
  return s;
}

// A file with derived columns is taken as prepared; raw records are built,
// imputed and filtered against the training window.
inline std::vector<panel::PanelRow> load_panel(const std::string& path, const pipeline::DesignOptions& opt) {
  require(!path.empty(), ErrorKind::invalid_argument, "--panel is required");
  const auto table = csv::read_file(path);
  if (table.column("is_fresh")) return panel::read_panel(path);
  return pipeline::prepare_panel(panel::records_from_table(table), opt.train_years.last, opt.filter);
}

inline std::optional<embed::EmbeddingTable> load_embeddings(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return embed::read_embeddings(path);
}

inline const embed::EmbeddingTable& need(const std::optional<embed::EmbeddingTable>& e, const std::string& why) {
  if (!e) fail(ErrorKind::invalid_argument, why + " requires --embeddings");
  return *e;
}

struct TrainedModel {
  RunConfig config;  // as used for training
  pipeline::DesignOptions design;
  features::Encoder encoder;
  pipeline::Model model;
};

inline TrainedModel load_trained(const std::string& dir) {
  require(!dir.empty(), ErrorKind::invalid_argument, "--model-dir is required");
  TrainedModel t;
  const auto dj = pipeline::Model::read_json(dir + "/design.json");
  try {
    t.config = RunConfig::from_json(dj.at("run_config"));
    t.design = pipeline::DesignOptions::from_json(dj.at("options"));
    t.encoder = features::Encoder::from_json(dj.at("encoder"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, dir + "/design.json: " + e.what());
  }
  t.model = pipeline::Model::load(dir);
  return t;
}

// Inputs default to those recorded at training time.
inline void inherit_inputs(RunConfig& c, const TrainedModel& t) {
  if (c.panel.empty()) c.panel = t.config.panel;
  if (c.embeddings.empty()) c.embeddings = t.config.embeddings;
}

inline std::vector<std::string> categories_of(const std::vector<panel::PanelRow>& rows, const std::string& field) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (field == "category") out.push_back(r.category);
    else if (field == "medium") out.push_back(r.medium);
    else if (field == "artist") out.push_back(r.artist);
    else if (field == "house") out.push_back(r.house);
    else if (field == "state") out.push_back(r.is_fresh ? "fresh" : "previous");
    else fail(ErrorKind::invalid_argument, "unknown grouping field '" + field + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot helpers

inline svg::Series decile_series(const std::string& name, const std::vector<eval::DecileRow>& d) {
  svg::Series s;
  s.name = name;
  for (const auto& r : d) {
    s.x.push_back(r.decile);
    s.y.push_back(r.mean_residual);
  }
  return s;
}

inline std::string deciles_csv(const std::vector<std::pair<std::string, std::vector<eval::DecileRow>>>& curves) {
  csv::Writer w({"series", "decile", "n", "y_low", "y_high", "mean_residual", "median_residual"});
  for (const auto& [name, rows] : curves)
    for (const auto& r : rows)
      w.row({name, std::to_string(r.decile), std::to_string(r.n), fixed(r.y_low), fixed(r.y_high),
             fixed(r.mean_residual), fixed(r.median_residual)});
  return w.str();
}

inline std::string bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<std::pair<std::string, double>>& bars) {
  svg::Chart c;
  c.title = title;
  c.y_label = y_label;
  svg::Series s;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    s.x.push_back(static_cast<double>(i));
    s.y.push_back(bars[i].second);
    s.labels.push_back(bars[i].first);
  }
  s.kind = svg::SeriesKind::bar;
  c.series.push_back(s);
  c.height = 460;
  return svg::render(c);
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_synth(RunConfig c) {
  ensure_dir(c.out);
  auto dgp = synth::preset(c.preset, c.seed);
  if (c.n_rows > 0) dgp.n_rows = c.n_rows;
  const auto ds = synth::generate(dgp);
  write_file(c.out + "/records.csv", panel::records_to_csv(ds.records));
  embed::write_embeddings(ds.embeddings, c.out + "/embeddings.aemb");
  write_file(c.out + "/truth.csv", synth::truth_csv(ds.truth));
  write_json(c.out + "/dgp.json", dgp.to_json());
  write_run_config(c);
  return ok;
}

inline int cmd_prep(RunConfig c) {
  ensure_dir(c.out);
  const auto opt = design_options(c);
  require(!c.panel.empty(), ErrorKind::invalid_argument, "--panel is required");
  const auto records = panel::read_records(c.panel);
  auto filter = opt.filter;
  filter.train_end_year = opt.train_years.last;
  const auto built = panel::impute_prev_price(panel::build_panel(records));
  const auto filtered = panel::apply_filters(built, filter);
  write_file(c.out + "/panel.csv", panel::panel_to_csv(filtered.rows));
  std::size_t fresh = 0, sold = 0;
  for (const auto& r : filtered.rows) {
    fresh += r.is_fresh;
    sold += r.sold;
  }
  nlohmann::json j = {{"n_input", records.size()},
                      {"n_rows", filtered.rows.size()},
                      {"n_fresh", fresh},
                      {"n_repeat", filtered.rows.size() - fresh},
                      {"n_sold", sold},
                      {"n_unsold", filtered.rows.size() - sold},
                      {"train_end_year", filtered.train_end_year}};
  for (const auto& [field, levels] : filtered.kept_levels) j["kept_levels"][field] = levels;
  write_json(c.out + "/prep.json", j);
  write_run_config(c);
  return ok;
}

inline int cmd_train(RunConfig c) {
  ensure_dir(c.out);
  const auto opt = design_options(c);
  const auto spec = model_spec(c);
  const auto rows = load_panel(c.panel, opt);
  const auto emb = load_embeddings(c.embeddings);
  if (spec.kind == pipeline::ModelKind::mmnet) need(emb, "--model mmnet");
  const auto d = pipeline::make_design(rows, emb ? &*emb : nullptr, opt);
  auto model = pipeline::fit_model(spec, d);
  model.save(c.out);
  auto recorded = c;
  recorded.out.clear();  // keeps the directory relocatable
  write_json(c.out + "/design.json",
             {{"run_config", recorded.to_json()}, {"options", opt.to_json()}, {"encoder", d.encoder.to_json()}});
  const auto& tr = model.train_result();
  nlohmann::json j = {{"model", c.model},
                      {"n_train", d.train_rows.size()},
                      {"n_test", d.test_rows.size()},
                      {"n_columns", d.train.cols()},
                      {"spec", spec.to_json()},
                      {"warnings", model.warnings()}};
  if (model.net()) {
    j["train_loss"] = tr.train_loss;
    j["val_loss"] = tr.val_loss;
    j["best_epoch"] = tr.best_epoch;
    j["diverged"] = tr.diverged;
  }
  write_json(c.out + "/train.json", j);
  if (model.net() && !tr.train_loss.empty()) {
    svg::Chart ch;
    ch.title = "Training loss";
    ch.x_label = "epoch";
    ch.y_label = "MSE (log price)";
    svg::Series a{"train", svg::SeriesKind::line, {}, tr.train_loss, {}};
    for (std::size_t e = 0; e < tr.train_loss.size(); ++e) a.x.push_back(static_cast<double>(e));
    ch.series.push_back(a);
    if (!tr.val_loss.empty()) {
      svg::Series b{"validation", svg::SeriesKind::line, {}, tr.val_loss, {}};
      for (std::size_t e = 0; e < tr.val_loss.size(); ++e) b.x.push_back(static_cast<double>(e));
      ch.series.push_back(b);
    }
    write_file(c.out + "/loss.svg", svg::render(ch));
  }
  write_run_config(c);
  return ok;
}

struct LoadedEval {
  TrainedModel trained;
  pipeline::Design design;
  Vector pred;
};

inline LoadedEval load_for_eval(RunConfig& c) {
  LoadedEval le;
  le.trained = load_trained(c.model_dir.empty() ? c.out : c.model_dir);
  inherit_inputs(c, le.trained);
  const auto rows = load_panel(c.panel, le.trained.design);
  const auto emb = load_embeddings(c.embeddings);
  if (le.trained.model.kind() == pipeline::ModelKind::mmnet) need(emb, "an mmnet model");
  le.design = pipeline::make_design(rows, emb ? &*emb : nullptr, le.trained.design, &le.trained.encoder);
  le.pred = pipeline::predict_test(le.trained.model, le.design);
  return le;
}

inline int cmd_eval(RunConfig c) {
  ensure_dir(c.out);
  auto le = load_for_eval(c);
  const auto& d = le.design;
  const auto& opt = le.trained.design;
  auto report = eval::stratified_report(pipeline::to_string(le.trained.model.kind()), d.y_test, le.pred,
                                        eval::fresh_flags(d.test_rows), pipeline::to_string(opt.target));
  write_json(c.out + "/metrics.json", report.to_json());
  csv::Writer m(eval::EvalReport::csv_header());
  m.row(report.csv_row());
  write_file(c.out + "/metrics.csv", m.str());

  csv::Writer res({"lot_id", "is_fresh", "y", "prediction", "residual"});
  std::vector<double> r_prev, r_fresh;
  for (std::size_t i = 0; i < d.test_rows.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    res.row({d.test_rows[i].lot_id, d.test_rows[i].is_fresh ? "1" : "0", fixed(d.y_test(k)), fixed(le.pred(k)),
             fixed(report.residuals(k))});
    (d.test_rows[i].is_fresh ? r_fresh : r_prev).push_back(report.residuals(k));
  }
  write_file(c.out + "/residuals.csv", res.str());

  svg::Chart h;
  h.title = "Residual distribution";
  h.x_label = "log residual (actual - predicted)";
  h.y_label = "density";
  const auto all = to_std(report.residuals);
  const auto hist_all = svg::histogram(all, 40);
  const double lo = hist_all.edges.front(), hi = hist_all.edges.back();
  if (!r_prev.empty()) h.series.push_back(svg::histogram_series("previous", svg::histogram(r_prev, 40, lo, hi)));
  if (!r_fresh.empty()) h.series.push_back(svg::histogram_series("fresh", svg::histogram(r_fresh, 40, lo, hi)));
  write_file(c.out + "/residual_hist.svg", svg::render(h));

  const auto deciles = eval::residual_deciles(d.y_test, le.pred);
  write_file(c.out + "/deciles.csv", deciles_csv({{"model", deciles}}));
  svg::Chart dc;
  dc.title = "Mean residual by realized-price decile";
  dc.x_label = "decile";
  dc.y_label = "mean log residual";
  dc.zero_line = true;
  dc.series.push_back(decile_series(report.model, deciles));
  write_file(c.out + "/deciles.svg", svg::render(dc));

  const auto bias = eval::grouped_residual_bias(report.residuals, categories_of(d.test_rows, "artist"), 10, 5);
  csv::Writer bw({"direction", "group", "n", "mean_residual"});
  for (const auto& g : bias.under) bw.row({"under", g.group, std::to_string(g.n), fixed(g.mean_residual)});
  for (const auto& g : bias.over) bw.row({"over", g.group, std::to_string(g.n), fixed(g.mean_residual)});
  write_file(c.out + "/group_bias.csv", bw.str());

  // Residual attribution: lasso selection then OLS on the test residuals.
  try {
    linmod::AttributionOptions ao;
    ao.seed = c.seed;
    const auto att = linmod::lasso_then_ols(d.test, report.residuals, ao);
    write_file(c.out + "/attribution.txt", att.to_text());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::data && e.kind() != ErrorKind::invalid_argument) throw;
    write_file(c.out + "/attribution.txt", std::string("no attribution: ") + e.what() + "\n");
  }
  write_run_config(c);
  return ok;
}

inline int cmd_importance(RunConfig c) {
  ensure_dir(c.out);
  auto le = load_for_eval(c);
  auto& d = le.design;
  auto& model = le.trained.model;
  const bool img = model.kind() == pipeline::ModelKind::mmnet;
  const Matrix Z = img ? pipeline::hcat(d.test.values, d.img_test) : d.test.values;
  const auto blocks = img ? pipeline::permutation_blocks(d.test, d.test.cols(), d.img_test.cols())
                          : pipeline::permutation_blocks(d.test);
  const auto predict = pipeline::joint_predictor(model, d.test.cols());
  csv::Writer w({"stratum", "rank", "feature", "mean_delta_mse", "sd", "se"});
  std::vector<std::pair<std::string, double>> top;
  for (const std::string stratum : {"all", "previous", "fresh"}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.test_rows.size(); ++i)
      if (stratum == "all" || d.test_rows[i].is_fresh == (stratum == "fresh")) idx.push_back(i);
    if (idx.size() < 2) continue;
    const auto imp = eval::ranked(eval::permutation_importance(predict, gather_rows(Z, idx), gather(d.y_test, idx),
                                                               blocks, c.repeats, c.seed));
    for (std::size_t k = 0; k < imp.size(); ++k) {
      w.row({stratum, std::to_string(k + 1), imp[k].feature, fixed(imp[k].mean), fixed(imp[k].sd), fixed(imp[k].se)});
      if (stratum == "all" && k < 15) top.push_back({imp[k].feature, imp[k].mean});
    }
  }
  write_file(c.out + "/importance.csv", w.str());
  write_file(c.out + "/importance.svg", bar_chart("Permutation importance (test)", "increase in MSE", top));
  if (model.boost()) {
    csv::Writer g({"feature", "total_gain", "mean_gain", "splits"});
    const auto& names = model.boost()->feature_names;
    for (const auto& [f, e] : boosting::gain_importance(*model.boost()))
      g.row({names[static_cast<std::size_t>(f)], fixed(e.total), fixed(e.mean), std::to_string(e.splits)});
    write_file(c.out + "/gain.csv", g.str());
  }
  write_run_config(c);
  return ok;
}

inline int cmd_ablate(RunConfig c) {
  ensure_dir(c.out);
  const auto opt = design_options(c);
  auto spec = model_spec(c);
  const auto rows = load_panel(c.panel, opt);
  const auto emb = load_embeddings(c.embeddings);
  auto configs = ablation::standard_configs();
  if (!c.groups.empty()) configs = {configs.front(), {"custom", opt.groups, opt.drop_sources}};
  const auto d_images = c.d_images.empty() ? ablation::standard_d_images() : c.d_images;
  const auto result = ablation::ablation_run(rows, need(emb, "ablate"), opt, spec, configs, d_images);
  write_file(c.out + "/ablation.csv", ablation::ablation_csv(result));
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : result) {
    auto e = r.report.to_json();
    e["config"] = r.config;
    e["d_image"] = r.d_image;
    e["n_columns"] = r.n_columns;
    j.push_back(e);
  }
  write_json(c.out + "/ablation.json", j);
  svg::Chart ch;
  ch.title = "Ablation: fresh-lot R2";
  ch.y_label = "R2 (fresh)";
  for (int dim : d_images) {
    svg::Series s;
    s.name = "d_image=" + std::to_string(dim);
    s.kind = svg::SeriesKind::bar;
    int k = 0;
    for (const auto& r : result)
      if (r.d_image == dim) {
        s.x.push_back(k++);
        s.y.push_back(r.report.fresh.r2);
        s.labels.push_back(r.config);
      }
    ch.series.push_back(s);
  }
  write_file(c.out + "/ablation.svg", svg::render(ch));
  write_run_config(c);
  return ok;
}

inline int cmd_stack(RunConfig c) {
  ensure_dir(c.out);
  auto opt = design_options(c);
  opt.with_estimates = false;  // estimates enter at the meta stage only
  const auto rows = load_panel(c.panel, opt);
  const auto d = pipeline::make_design(rows, nullptr, opt);
  auto sc = ensemble::default_stack_config(c.seed);
  sc.k_folds = c.folds;
  if (c.rounds > 0) sc.base_params.rounds = c.rounds;
  const auto [lo_tr, hi_tr] = pipeline::estimate_bounds(d.train_rows);
  const auto [lo_te, hi_te] = pipeline::estimate_bounds(d.test_rows);
  const auto run = ensemble::run_stack({d.train.values, d.y_train, lo_tr, hi_tr}, {d.test.values, d.y_test, lo_te, hi_te},
                                       eval::fresh_flags(d.test_rows), sc);
  const auto& rep = run.report;
  nlohmann::json j = {{"stack", rep.stack.to_json()},
                      {"estimates_only", rep.estimates_only.to_json()},
                      {"skew_stack", rep.residuals.skew_stack},
                      {"skew_estimates_only", rep.residuals.skew_estimates_only},
                      {"skew_low_estimate", rep.residuals.skew_low_estimate},
                      {"k_folds", sc.k_folds}};
  write_json(c.out + "/stack.json", j);
  csv::Writer m(eval::EvalReport::csv_header());
  m.row(rep.stack.csv_row());
  m.row(rep.estimates_only.csv_row());
  write_file(c.out + "/metrics.csv", m.str());
  write_file(c.out + "/deciles.csv",
             deciles_csv({{"stack", rep.residuals.stack}, {"estimates_only", rep.residuals.estimates_only}}));
  svg::Chart dc;
  dc.title = "Mean residual by realized-price decile";
  dc.x_label = "decile";
  dc.y_label = "mean log residual";
  dc.zero_line = true;
  dc.series = {decile_series("stack", rep.residuals.stack), decile_series("estimates only", rep.residuals.estimates_only)};
  write_file(c.out + "/deciles.svg", svg::render(dc));

  svg::Chart h;
  h.title = "Residual distribution";
  h.x_label = "log residual";
  h.y_label = "density";
  const Vector r_stack = d.y_test - run.stack_pred, r_est = d.y_test - run.estimates_only_pred;
  const Vector r_low = d.y_test - lo_te.array().log().matrix();
  const auto span = svg::histogram(to_std(r_low), 40);
  const double a = std::min(span.edges.front(), std::min(r_stack.minCoeff(), r_est.minCoeff()));
  const double b = std::max(span.edges.back(), std::max(r_stack.maxCoeff(), r_est.maxCoeff()));
  h.series = {svg::histogram_series("stack", svg::histogram(to_std(r_stack), 40, a, b)),
              svg::histogram_series("estimates only", svg::histogram(to_std(r_est), 40, a, b)),
              svg::histogram_series("low estimate", svg::histogram(to_std(r_low), 40, a, b))};
  write_file(c.out + "/residual_hist.svg", svg::render(h));

  const auto shap = ensemble::shap_summary(run.stack, run.meta_test, categories_of(d.test_rows, "category"));
  std::vector<std::string> header = {"category", "mean_prediction"};
  for (const auto& f : shap.features) header.push_back("shap_" + f);
  csv::Writer sw(header);
  for (const auto& [cat, means] : shap.category_means) {
    std::vector<std::string> row = {cat, fixed(shap.category_mean_prediction.at(cat))};
    for (Eigen::Index k = 0; k < means.size(); ++k) row.push_back(fixed(means(k)));
    sw.row(row);
  }
  write_file(c.out + "/shap_by_category.csv", sw.str());
  write_run_config(c);
  return ok;
}

inline int cmd_classify(RunConfig c) {
  ensure_dir(c.out);
  auto opt = design_options(c);
  opt.with_estimates = true;
  const auto rows = load_panel(c.panel, opt);
  const auto emb = load_embeddings(c.embeddings);
  auto spec = model_spec(c);
  require(spec.kind == pipeline::ModelKind::net || spec.kind == pipeline::ModelKind::mmnet ||
              spec.kind == pipeline::ModelKind::boost,
          ErrorKind::invalid_argument, "classify supports --model net, mmnet or boost");
  if (spec.kind == pipeline::ModelKind::mmnet) need(emb, "--model mmnet");
  const auto d = pipeline::make_classification_design(rows, emb ? &*emb : nullptr, opt, 0.2, c.seed);
  auto model = pipeline::Model::fit(spec, d.train, d.y_train, d.has_image() ? &d.img_train : nullptr,
                                    pipeline::years_of(d.train_rows), nn::Task::classification);
  const bool img = spec.kind == pipeline::ModelKind::mmnet;
  const Vector p = model.predict(d.test.values, img ? &d.img_test : nullptr);
  std::vector<int> labels;
  for (Eigen::Index i = 0; i < d.y_test.size(); ++i) labels.push_back(d.y_test(i) > 0.5 ? 1 : 0);
  const auto rep = eval::roc_auc(p, labels, 0.5);
  const auto perm = eval::auc_permutation_test(p, labels, 200, c.seed);
  nlohmann::json j = rep.to_json();
  j["model"] = c.model;
  j["n_train"] = d.train_rows.size();
  j["n_test"] = d.test_rows.size();
  j["permutation_test"] = {{"auc", perm.auc}, {"null_mean", perm.null_mean}, {"null_sd", perm.null_sd}, {"z", perm.z}};
  write_json(c.out + "/classify.json", j);

  csv::Writer rw({"threshold", "fpr", "tpr"});
  svg::Series roc{"model", svg::SeriesKind::line, {}, {}, {}};
  for (const auto& pt : rep.roc) {
    rw.row({fixed(pt.threshold), fixed(pt.fpr), fixed(pt.tpr)});
    roc.x.push_back(pt.fpr);
    roc.y.push_back(pt.tpr);
  }
  write_file(c.out + "/roc.csv", rw.str());
  svg::Chart ch;
  ch.title = "ROC (AUC " + csv::format_fixed(rep.auc, 3) + ")";
  ch.x_label = "false positive rate";
  ch.y_label = "true positive rate";
  ch.series = {roc, {"chance", svg::SeriesKind::line, {0, 1}, {0, 1}, {}}};
  write_file(c.out + "/roc.svg", svg::render(ch));

  const Matrix Z = img ? pipeline::hcat(d.test.values, d.img_test) : d.test.values;
  const auto blocks = img ? pipeline::permutation_blocks(d.test, d.test.cols(), d.img_test.cols())
                          : pipeline::permutation_blocks(d.test);
  // Brier score: the squared-error loss of permutation_importance on 0/1 labels.
  const auto imp = eval::ranked(eval::permutation_importance(pipeline::joint_predictor(model, d.test.cols()), Z,
                                                             d.y_test, blocks, c.repeats, c.seed));
  write_file(c.out + "/importance.csv", eval::importance_csv(imp));

  std::vector<int> predicted;
  for (Eigen::Index i = 0; i < p.size(); ++i) predicted.push_back(p(i) >= 0.5 ? 1 : 0);
  const auto [lo, hi] = pipeline::estimate_bounds(d.test_rows);
  const Vector log_mid = (0.5 * (lo + hi)).array().log().matrix();
  csv::Writer ew({"error_type", "n", "mean", "sd", "q25", "median", "q75"});
  for (const auto& [type, s] : eval::error_type_distributions(predicted, labels, log_mid))
    ew.row({type, std::to_string(s.n), fixed(s.mean), fixed(s.sd), fixed(s.q25), fixed(s.median), fixed(s.q75)});
  write_file(c.out + "/error_types.csv", ew.str());
  write_run_config(c);
  return ok;
}

inline int cmd_pca(RunConfig c) {
  ensure_dir(c.out);
  const auto emb = load_embeddings(c.embeddings);
  const auto& table = need(emb, "pca");
  std::vector<std::string> ids = table.ids();
  std::map<std::string, std::string> key;
  if (!c.panel.empty()) {
    const auto rows = load_panel(c.panel, design_options(c));
    const auto labels = categories_of(rows, c.color_by);
    for (std::size_t i = 0; i < rows.size(); ++i) key[rows[i].lot_id] = labels[i];
    std::vector<std::string> kept;
    for (const auto& id : ids)
      if (key.count(id)) kept.push_back(id);
    ids = kept;
  }
  require(ids.size() >= 3, ErrorKind::data, "pca: fewer than 3 embeddings to project");
  Matrix x = table.rows(ids);
  std::string source = "embeddings";
  if (!c.model_dir.empty()) {
    // project the trained network's fused representation instead
    auto t = load_trained(c.model_dir);
    auto* net = t.model.net();
    require(net != nullptr, ErrorKind::invalid_argument, "pca: --model-dir must hold a net or mmnet model");
    require(!c.panel.empty(), ErrorKind::invalid_argument, "pca with --model-dir requires --panel");
    const auto rows = load_panel(c.panel, t.design);
    std::vector<panel::PanelRow> sel;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < rows.size(); ++i) pos[rows[i].lot_id] = i;
    for (const auto& id : ids) sel.push_back(rows[pos.at(id)]);
    const auto fm = t.encoder.transform(sel);
    const nn::Mat<float> tab = pipeline::finish_matrix(fm, t.design).values.transpose().cast<float>();
    const nn::Mat<float> im = x.transpose().cast<float>();
    const auto fused = net->extract_fused_embedding(tab, net->config().has_image() ? &im : nullptr);
    x = fused.fused.transpose().cast<double>();
    source = "fused";
  }
  const auto pca = embed::pca_project(x);
  csv::Writer w({"lot_id", "pc1", "pc2", c.color_by});
  std::map<std::string, svg::Series> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const std::string g = key.count(ids[i]) ? key[ids[i]] : "all";
    w.row({ids[i], fixed(pca.points(k, 0)), fixed(pca.points(k, 1)), g});
    auto& s = groups[g];
    s.name = g;
    s.kind = svg::SeriesKind::scatter;
    s.x.push_back(pca.points(k, 0));
    s.y.push_back(pca.points(k, 1));
  }
  write_file(c.out + "/pca.csv", w.str());
  const auto& ratio = pca.projection.explained_variance_ratio;
  write_json(c.out + "/pca.json", {{"source", source},
                                    {"n", ids.size()},
                                    {"dim", x.cols()},
                                    {"explained_variance_ratio", {ratio(0), ratio(1)}},
                                    {"warnings", pca.projection.warnings}});
  svg::Chart ch;
  ch.title = "PCA of " + source + " (" + csv::format_fixed(100 * ratio(0), 1) + "% / " +
             csv::format_fixed(100 * ratio(1), 1) + "%)";
  ch.x_label = "PC1";
  ch.y_label = "PC2";
  for (auto& [g, s] : groups) ch.series.push_back(std::move(s));
  write_file(c.out + "/pca.svg", svg::render(ch));
  write_run_config(c);
  return ok;
}

// Side-by-side model comparison plus per-subgroup gain of the image branch.
inline int cmd_report(RunConfig c) {
  ensure_dir(c.out);
  const auto opt = design_options(c);
  const auto rows = load_panel(c.panel, opt);
  const auto emb = load_embeddings(c.embeddings);
  const auto d = pipeline::make_design(rows, emb ? &*emb : nullptr, opt);
  std::vector<std::string> kinds = {"hedonic", "ridge", "boost", "net"};
  if (emb) kinds.push_back("mmnet");
  csv::Writer m(eval::EvalReport::csv_header());
  nlohmann::json j = nlohmann::json::array();
  std::map<std::string, Vector> preds;
  for (const auto& k : kinds) {
    auto rc = c;
    rc.model = k;
    auto model = pipeline::fit_model(model_spec(rc), d);
    auto rep = pipeline::evaluate(model, d, opt);
    preds[k] = d.y_test - rep.residuals;
    m.row(rep.csv_row());
    j.push_back(rep.to_json());
  }
  write_file(c.out + "/comparison.csv", m.str());
  write_json(c.out + "/comparison.json", j);
  if (emb) {
    const Vector e_tab = (d.y_test - preds["net"]).cwiseAbs();
    const Vector e_img = (d.y_test - preds["mmnet"]).cwiseAbs();
    csv::Writer w({"grouping", "group", "n", "mae_tabular", "mae_multimodal", "relative_gain", "ci_low", "ci_high",
                   "low_confidence"});
    std::vector<std::pair<std::string, double>> bars;
    eval::SubgroupOptions so;
    so.seed = c.seed;
    for (const std::string field : {"state", "category", "medium"}) {
      for (const auto& g : eval::subgroup_gain(e_tab, e_img, categories_of(d.test_rows, field), so)) {
        w.row({field, g.group, std::to_string(g.n), fixed(g.mae_tab), fixed(g.mae_img), fixed(g.gain), fixed(g.ci_low),
               fixed(g.ci_high), g.low_confidence ? "1" : "0"});
        bars.push_back({field + ":" + g.group, g.gain});
      }
    }
    write_file(c.out + "/subgroup_gain.csv", w.str());
    write_file(c.out + "/subgroup_gain.svg", bar_chart("Relative MAE gain from images", "relative gain", bars));
  }
  write_run_config(c);
  return ok;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run(int argc, char** argv) {
  CLI::App app{"artval: auction price models with tabular and image features"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  RunConfig c;

  auto out = [&](CLI::App* s) { s->add_option("--out", c.out, "output directory")->required(); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", c.seed, "random seed"); };
  auto years = [&](CLI::App* s) {
    s->add_option("--train-years", c.train_years, "training years A:B");
    s->add_option("--test-years", c.test_years, "test years A:B");
  };
  auto data = [&](CLI::App* s, bool panel_required) {
    auto* p = s->add_option("--panel", c.panel, "panel CSV (raw records or prepared)");
    if (panel_required) p->required();
    s->add_option("--embeddings", c.embeddings, "AEMB embedding table");
  };
  auto design = [&](CLI::App* s) {
    s->add_flag("--no-prev-price", c.no_prev_price, "keep only the previous-sale indicator");
    s->add_option("--target", c.target, "price or esterr")->check(CLI::IsMember({"price", "esterr"}));
    s->add_option("--groups", c.groups, "feature groups (object artist venue timing history estimates)");
    s->add_flag("--poly", c.poly, "degree-2 expansion of numeric columns");
    s->add_flag("--with-estimates", c.with_estimates, "add presale estimate features");
    s->add_flag("--overpay", c.overpay, "add the previous-sale overpay feature");
  };
  auto model = [&](CLI::App* s) {
    s->add_option("--model", c.model, "hedonic, ridge, lasso, boost, net or mmnet")
        ->check(CLI::IsMember({"hedonic", "ridge", "lasso", "boost", "net", "mmnet"}));
    s->add_option("--d-image", c.d_image, "image projection width")->check(CLI::PositiveNumber);
    s->add_option("--epochs", c.epochs, "network epochs")->check(CLI::NonNegativeNumber);
    s->add_option("--rounds", c.rounds, "boosting rounds")->check(CLI::NonNegativeNumber);
    s->add_option("--folds", c.folds, "cross-validation folds")->check(CLI::Range(2, 100));
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic panel and embeddings");
  out(synth);
  seed(synth);
  synth->add_option("--preset", c.preset, "DGP preset")->check(CLI::IsMember(synth::preset_names()));
  synth->add_option("--n-rows", c.n_rows, "override the preset row count")->check(CLI::NonNegativeNumber);

  auto* prep = app.add_subcommand("prep", "build, impute and filter a panel");
  out(prep);
  years(prep);
  prep->add_option("--panel", c.panel, "raw records CSV")->required();

  auto* train = app.add_subcommand("train", "fit a price model");
  out(train);
  seed(train);
  years(train);
  data(train, true);
  design(train);
  model(train);

  auto* ev = app.add_subcommand("eval", "evaluate a trained model on the test years");
  out(ev);
  seed(ev);
  data(ev, false);
  ev->add_option("--model-dir", c.model_dir, "directory written by train (default: --out)");

  auto* imp = app.add_subcommand("importance", "permutation and gain importance");
  out(imp);
  seed(imp);
  data(imp, false);
  imp->add_option("--model-dir", c.model_dir, "directory written by train (default: --out)");
  imp->add_option("--repeats", c.repeats, "permutations per feature")->check(CLI::PositiveNumber);

  auto* abl = app.add_subcommand("ablate", "feature-group ablation of the multi-modal network");
  out(abl);
  seed(abl);
  years(abl);
  data(abl, true);
  abl->add_option("--groups", c.groups, "custom configuration to compare against the baseline");
  abl->add_option("--d-image", c.d_images, "image projection widths")->check(CLI::PositiveNumber);
  abl->add_option("--epochs", c.epochs, "network epochs")->check(CLI::NonNegativeNumber);

  auto* stk = app.add_subcommand("stack", "two-stage stack against the estimates-only benchmark");
  out(stk);
  seed(stk);
  years(stk);
  stk->add_option("--panel", c.panel, "panel CSV")->required();
  stk->add_option("--rounds", c.rounds, "first-stage boosting rounds")->check(CLI::NonNegativeNumber);
  stk->add_option("--folds", c.folds, "out-of-fold splits")->check(CLI::Range(2, 100));

  auto* cls = app.add_subcommand("classify", "sold versus unsold classifier");
  out(cls);
  seed(cls);
  years(cls);
  data(cls, true);
  model(cls);
  cls->add_option("--repeats", c.repeats, "permutations per feature")->check(CLI::PositiveNumber);

  auto* pca = app.add_subcommand("pca", "two-component projection of embeddings");
  out(pca);
  years(pca);
  data(pca, false);
  pca->add_option("--model-dir", c.model_dir, "project a trained network's fused representation");
  pca->add_option("--color-by", c.color_by, "category, medium, artist, house or state");

  auto* rep = app.add_subcommand("report", "model comparison and subgroup gains");
  out(rep);
  seed(rep);
  years(rep);
  data(rep, true);
  design(rep);
  rep->add_option("--d-image", c.d_image, "image projection width")->check(CLI::PositiveNumber);
  rep->add_option("--epochs", c.epochs, "network epochs")->check(CLI::NonNegativeNumber);
  rep->add_option("--rounds", c.rounds, "boosting rounds")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "artval: " << e.what() << "\n";
    return usage_error;
  }

  try {
    auto* sub = app.get_subcommands().front();
    c.command = sub->get_name();
    if (c.command == "synth") return cmd_synth(c);
    if (c.command == "prep") return cmd_prep(c);
    if (c.command == "train") return cmd_train(c);
    if (c.command == "eval") return cmd_eval(c);
    if (c.command == "importance") return cmd_importance(c);
    if (c.command == "ablate") return cmd_ablate(c);
    if (c.command == "stack") return cmd_stack(c);
    if (c.command == "classify") return cmd_classify(c);
    if (c.command == "pca") return cmd_pca(c);
    if (c.command == "report") return cmd_report(c);
    std::cerr << "artval: unknown subcommand\n";
    return usage_error;
  } catch (const Error& e) {
    std::cerr << "artval " << c.command << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "artval " << c.command << ": " << e.what() << "\n";
    return other_error;
  }
}

}  // namespace artval::cli

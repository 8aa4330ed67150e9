// Acceptance suite: one [PASS]/[FAIL] line per headline criterion. Thresholds
// are fixed below; exit status is nonzero when any criterion fails.

#include "artval/ablation.hpp"
#include "artval/ensemble.hpp"
#include "artval/pipeline.hpp"
#include "artval/synth.hpp"
#include "support/cli_runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#ifndef ARTVAL_ORACLE_PATH
#error "ARTVAL_ORACLE_PATH must name the oracle test executable"
#endif

using namespace artval;

namespace {

constexpr int kSeeds = 5;

// visual value
constexpr double kMinFreshGain = 0.05;
constexpr double kMaxPrevGap = 0.02;
// interior optimum
constexpr int kModerateDim = 500;
constexpr int kHugeDim = 10000;
// importance
constexpr int kImportanceRounds = 300;
constexpr int kImportanceRepeats = 5;
constexpr double kNullSe = 2.0;
// ablation
constexpr double kMinArtistDrop = 0.1;
constexpr double kMaxMinimalPrevLoss = 0.1;
// ensemble
constexpr int kMinTailWins = 4;
constexpr double kMaxR2Gap = 0.01;
// estimation error
constexpr double kMaxEsterrR2 = 0.2;
// classification
constexpr double kMinAuc = 0.6;
constexpr double kMaxAuc = 0.9;
constexpr double kMinZ = 5.0;
constexpr std::size_t kEstimateTopK = 3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Data {
  synth::Dataset ds;
  std::vector<panel::PanelRow> rows;
};

Data make_data(const std::string& preset, std::uint64_t seed) {
  Data x;
  x.ds = synth::generate(synth::preset(preset, seed));
  x.rows = pipeline::prepare_panel(x.ds.records, 2021);
  return x;
}

eval::EvalReport fit_eval(const pipeline::Design& d, const pipeline::DesignOptions& opt, pipeline::ModelSpec spec) {
  auto m = pipeline::fit_model(spec, d);
  return pipeline::evaluate(m, d, opt);
}

Outcome visual_value() {
  double fresh = 0, prev = 0;
  std::ostringstream per;
  for (int s = 0; s < kSeeds; ++s) {
    const auto x = make_data("anchored", s);
    pipeline::DesignOptions opt;
    const auto d = pipeline::make_design(x.rows, &x.ds.embeddings, opt);
    pipeline::ModelSpec spec;
    spec.seed = static_cast<std::uint64_t>(s);
    spec.kind = pipeline::ModelKind::net;
    const auto tab = fit_eval(d, opt, spec);
    spec.kind = pipeline::ModelKind::mmnet;
    const auto mm = fit_eval(d, opt, spec);
    fresh += mm.fresh.r2 - tab.fresh.r2;
    prev += mm.previous.r2 - tab.previous.r2;
    per << " s" << s << "=" << fmt(mm.fresh.r2 - tab.fresh.r2, 3);
  }
  fresh /= kSeeds;
  prev /= kSeeds;
  return {fresh >= kMinFreshGain && std::abs(prev) <= kMaxPrevGap,
          "mean fresh gain " + fmt(fresh) + " (>= " + fmt(kMinFreshGain, 2) + "), mean prev gap " + fmt(prev) +
              " (|.| <= " + fmt(kMaxPrevGap, 2) + ");" + per.str()};
}

Outcome interior_optimum() {
  double moderate = 0, huge = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto x = make_data("small", s);
    pipeline::DesignOptions opt;
    const auto d = pipeline::make_design(x.rows, &x.ds.embeddings, opt);
    pipeline::ModelSpec spec;
    spec.kind = pipeline::ModelKind::mmnet;
    spec.seed = static_cast<std::uint64_t>(s);
    spec.net.d_image = kModerateDim;
    moderate += fit_eval(d, opt, spec).fresh.r2;
    spec.net.d_image = kHugeDim;
    huge += fit_eval(d, opt, spec).fresh.r2;
  }
  moderate /= kSeeds;
  huge /= kSeeds;
  return {moderate > huge, "fresh R2 d=" + std::to_string(kModerateDim) + " " + fmt(moderate) + " vs d=" +
                               std::to_string(kHugeDim) + " " + fmt(huge)};
}

Outcome oracles() {
  const std::vector<std::pair<std::string, std::string>> families = {
      {"ols", "LinearOracles.Ols*"},
      {"ridge", "LinearOracles.Ridge*"},
      {"lasso", "LinearOracles.Lasso*"},
      {"tree_shap", "Dimensions/TreeShapOracle.*"},
      {"split_search", "BoostOracles.SingleStump*"},
      {"nn_gradients", "NetOracles.*GradientsMatchFiniteDifferences"},
      {"pca", "EvalOracles.Pca*"},
  };
  bool all = true;
  std::string detail;
  for (const auto& [name, filter] : families) {
    const std::string cmd = std::string(ARTVAL_ORACLE_PATH) + " --gtest_filter='" + filter + "' --gtest_brief=1 2>&1";
    std::string out;
    int rc = -1;
    if (FILE* p = popen(cmd.c_str(), "r")) {
      char buf[512];
      while (std::fgets(buf, sizeof buf, p)) out += buf;
      rc = pclose(p);
    }
    // an empty filter match also exits 0
    int ran = 0;
    if (const auto k = out.find("[  PASSED  ] "); k != std::string::npos) ran = std::atoi(out.c_str() + k + 13);
    const bool ok = rc == 0 && ran > 0;
    all = all && ok;
    detail += " " + name + "=" + (ok ? std::to_string(ran) + " ok" : "FAILED");
  }
  return {all, detail.substr(1)};
}

std::vector<eval::Importance> stratum_importance(pipeline::Model& m, const pipeline::Design& d, bool fresh,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.test_rows.size(); ++i)
    if (d.test_rows[i].is_fresh == fresh) idx.push_back(i);
  return eval::ranked(eval::permutation_importance(pipeline::joint_predictor(m, d.test.cols()),
                                                   gather_rows(d.test.values, idx), gather(d.y_test, idx),
                                                   pipeline::permutation_blocks(d.test), kImportanceRepeats, seed));
}

Outcome importance() {
  const auto x = make_data("anchored", 0);
  pipeline::DesignOptions opt;
  const auto d = pipeline::make_design(x.rows, nullptr, opt);
  pipeline::ModelSpec spec;
  spec.kind = pipeline::ModelKind::boost;
  spec.boost.rounds = kImportanceRounds;
  auto m = pipeline::fit_model(spec, d);

  const auto prev = stratum_importance(m, d, false, 0);
  const auto fresh = stratum_importance(m, d, true, 0);
  const bool prev_first = !prev.empty() && prev.front().feature == "prev_price";

  std::set<std::string> object_sources;
  for (std::size_t j = 0; j < d.test.sources.size(); ++j)
    if (d.test.groups[j] == features::Group::object) object_sources.insert(d.test.sources[j]);
  std::size_t prev_rank = fresh.size(), object_rank = fresh.size();
  double prev_mean = 0, prev_se = 0;
  std::string top_object;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (fresh[k].feature == "prev_price") {
      prev_rank = k;
      prev_mean = fresh[k].mean;
      prev_se = fresh[k].se;
    }
    if (object_sources.count(fresh[k].feature) && object_rank == fresh.size()) {
      object_rank = k;
      top_object = fresh[k].feature;
    }
  }
  const bool null_on_fresh = std::abs(prev_mean) <= kNullSe * prev_se;
  const bool object_above = object_rank < prev_rank;
  return {prev_first && null_on_fresh && object_above,
          "previous top=" + (prev.empty() ? std::string("-") : prev.front().feature) + "; fresh prev_price " +
              fmt(prev_mean, 6) + " (se " + fmt(prev_se, 6) + ", rank " + std::to_string(prev_rank + 1) +
              "), top object feature " + top_object + " rank " + std::to_string(object_rank + 1)};
}

Outcome ablation_pattern() {
  const auto x = make_data("anchored", 0);
  pipeline::DesignOptions opt;
  pipeline::ModelSpec spec;
  const auto res = ablation::ablation_run(x.rows, x.ds.embeddings, opt, spec, ablation::standard_configs(),
                                          ablation::standard_d_images());
  bool pass = true;
  std::string detail;
  for (int d : ablation::standard_d_images()) {
    const eval::EvalReport *base = nullptr, *no_artist = nullptr, *minimal = nullptr;
    for (const auto& r : res) {
      if (r.d_image != d) continue;
      if (r.config == "baseline") base = &r.report;
      if (r.config == "no_artist") no_artist = &r.report;
      if (r.config == "minimal") minimal = &r.report;
    }
    if (!base || !no_artist || !minimal) return {false, "missing ablation configuration"};
    const double drop = base->fresh.r2 - no_artist->fresh.r2;
    const double loss = base->previous.r2 - minimal->previous.r2;
    pass = pass && drop >= kMinArtistDrop && loss <= kMaxMinimalPrevLoss;
    detail += " d=" + std::to_string(d) + ": artist fresh drop " + fmt(drop) + ", minimal prev loss " + fmt(loss) + ";";
  }
  return {pass, detail.substr(1)};
}

Outcome ensemble_calibration() {
  int wins = 0;
  double gap = 0;
  std::string per;
  for (int s = 0; s < kSeeds; ++s) {
    const auto x = make_data("tail_biased", s);
    pipeline::DesignOptions opt;
    const auto d = pipeline::make_design(x.rows, nullptr, opt);
    const auto [lo_tr, hi_tr] = pipeline::estimate_bounds(d.train_rows);
    const auto [lo_te, hi_te] = pipeline::estimate_bounds(d.test_rows);
    const auto run = ensemble::run_stack({d.train.values, d.y_train, lo_tr, hi_tr},
                                         {d.test.values, d.y_test, lo_te, hi_te}, eval::fresh_flags(d.test_rows),
                                         ensemble::default_stack_config(static_cast<std::uint64_t>(s)));
    const auto& a = run.report.residuals.stack;
    const auto& b = run.report.residuals.estimates_only;
    const bool tails = std::abs(a.front().mean_residual) <= std::abs(b.front().mean_residual) &&
                       std::abs(a.back().mean_residual) <= std::abs(b.back().mean_residual);
    wins += tails ? 1 : 0;
    const double g = run.report.stack.all.r2 - run.report.estimates_only.all.r2;
    gap += g;
    per += " s" + std::to_string(s) + "=" + (tails ? "tails" : "no") + "/" + fmt(g, 3);
  }
  gap /= kSeeds;
  return {wins >= kMinTailWins && std::abs(gap) <= kMaxR2Gap,
          "tail wins " + std::to_string(wins) + "/" + std::to_string(kSeeds) + ", mean R2 gap " + fmt(gap) + ";" + per};
}

Outcome estimation_error() {
  const auto x = make_data("estimation_error", 0);
  pipeline::DesignOptions opt;
  opt.target = pipeline::Target::esterr;
  const auto d = pipeline::make_design(x.rows, nullptr, opt);
  bool pass = true;
  std::string detail;
  for (const std::string kind : {"hedonic", "ridge", "boost", "net"}) {
    pipeline::ModelSpec spec;
    spec.kind = pipeline::parse_model(kind);
    spec.boost.rounds = kImportanceRounds;
    const auto r = fit_eval(d, opt, spec);
    pass = pass && r.all.r2 < kMaxEsterrR2 && r.fresh.r2 >= r.previous.r2;
    detail += " " + kind + " all " + fmt(r.all.r2, 3) + " prev " + fmt(r.previous.r2, 3) + " fresh " +
              fmt(r.fresh.r2, 3) + ";";
  }
  return {pass, detail.substr(1)};
}

Outcome classification() {
  const auto x = make_data("classification", 0);
  pipeline::DesignOptions opt;
  opt.with_estimates = true;
  const auto d = pipeline::make_classification_design(x.rows, &x.ds.embeddings, opt, 0.2, 0);
  pipeline::ModelSpec spec;
  spec.kind = pipeline::ModelKind::mmnet;
  auto m = pipeline::Model::fit(spec, d.train, d.y_train, &d.img_train, pipeline::years_of(d.train_rows),
                                      nn::Task::classification);
  const Vector p = m.predict(d.test.values, &d.img_test);
  std::vector<int> labels;
  for (Eigen::Index i = 0; i < d.y_test.size(); ++i) labels.push_back(d.y_test(i) > 0.5 ? 1 : 0);
  const auto roc = eval::roc_auc(p, labels, 0.5);
  const auto perm = eval::auc_permutation_test(p, labels, 200, 0);
  const auto imp = eval::ranked(eval::permutation_importance(
      pipeline::joint_predictor(m, d.test.cols()), pipeline::hcat(d.test.values, d.img_test), d.y_test,
      pipeline::permutation_blocks(d.test, d.test.cols(), d.img_test.cols()), kImportanceRepeats, 0));
  std::string top;
  bool estimate_top = false;
  for (std::size_t k = 0; k < std::min(kEstimateTopK, imp.size()); ++k) {
    top += (k ? "," : "") + imp[k].feature;
    estimate_top = estimate_top || imp[k].feature == "estimate_low" || imp[k].feature == "estimate_high";
  }
  return {roc.auc > kMinAuc && roc.auc < kMaxAuc && perm.z >= kMinZ && estimate_top,
          "AUC " + fmt(roc.auc) + ", accuracy " + fmt(roc.accuracy) + ", permutation z " + fmt(perm.z, 1) + ", top " +
              std::to_string(kEstimateTopK) + " " + top};
}

Outcome determinism() {
  using namespace artval::testing_support;
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "artval_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto data = base / "run1" / "synth";
  const auto model = base / "run1" / "train";
  const auto plan = all_subcommands(data.string(), model.string(), 4000);
  for (const std::string run : {"run1", "run2"})
    for (const auto& inv : plan) {
      const auto log = base / (run + "_" + inv.name + ".log");
      if (run_cli(inv.args + " --out " + (base / run / inv.name).string(), log.string()) != 0)
        return {false, run + " " + inv.name + " failed: " + slurp(log)};
    }
  std::string diffs;
  std::size_t files = 0;
  for (const auto& inv : plan) {
    for (const auto& f : differing_files(base / "run1" / inv.name, base / "run2" / inv.name))
      diffs += " " + inv.name + "/" + f;
    for (const auto& e : fs::directory_iterator(base / "run1" / inv.name)) files += e.is_regular_file() ? 1 : 0;
  }
  return {diffs.empty(), std::to_string(plan.size()) + " subcommands, " + std::to_string(files) + " files" +
                             (diffs.empty() ? ", all identical" : "; differing:" + diffs)};
}

}  // namespace

// An optional argument restricts the run to criteria whose name contains it.
int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"visual_value_is_state_dependent", visual_value},
      {"interior_optimum_embedding_dim", interior_optimum},
      {"oracle_equivalences", oracles},
      {"importance_pattern", importance},
      {"ablation_pattern", ablation_pattern},
      {"ensemble_calibration", ensemble_calibration},
      {"estimation_error_difficulty", estimation_error},
      {"classification", classification},
      {"determinism", determinism},
  };
  int failed = 0;
  std::size_t run = 0;
  for (const auto& [name, check] : criteria) {
    if (name.find(only) == std::string::npos) continue;
    ++run;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << " (" << fmt(secs, 1) << "s)"
              << std::endl;
  }
  std::cout << (run - static_cast<std::size_t>(failed)) << "/" << run << " criteria passed"
            << std::endl;
  return failed == 0 && run > 0 ? 0 : 1;
}

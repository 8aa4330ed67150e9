#include "artval/featurize.hpp"
#include "artval/panel.hpp"
#include "artval/synth.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace artval;
using panel::PanelRow;
using panel::TransactionRecord;

namespace {

TransactionRecord rec(const std::string& lot, const std::string& obj, int year, int month, std::optional<double> price) {
  TransactionRecord r;
  r.lot_id = lot;
  r.object_id = obj;
  r.sale_year = year;
  r.sale_month = month;
  r.price = price;
  r.sold = price.has_value();
  r.estimate_low = 20000;
  r.estimate_high = 30000;
  r.artist = "a";
  r.house = "h";
  r.category = "c";
  r.medium = "oil";
  r.shape = "portrait";
  r.height = 50;
  r.width = 40;
  r.image_ref = lot + ".jpg";
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::io;
}

}  // namespace

TEST(Panel, AnchorsOnPreviousRealizedPrice) {
  // bought-in second appearance: not fresh, but the anchor stays the first sale
  const auto rows = panel::build_panel({rec("l3", "o1", 2010, 5, 70000.0), rec("l1", "o1", 2001, 1, 50000.0),
                                        rec("l2", "o1", 2005, 3, std::nullopt), rec("l4", "o2", 2003, 1, 15000.0)});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].lot_id, "l1");
  EXPECT_TRUE(rows[0].is_fresh);
  EXPECT_FALSE(rows[0].has_prev);
  EXPECT_EQ(rows[1].lot_id, "l2");
  EXPECT_FALSE(rows[1].is_fresh);
  EXPECT_EQ(rows[1].prev_price, 50000.0);
  EXPECT_EQ(rows[2].lot_id, "l3");
  EXPECT_EQ(rows[2].prev_price, 50000.0);
  EXPECT_EQ(rows[2].prev_estimate_mid, 25000.0);
  EXPECT_TRUE(rows[3].is_fresh);
  EXPECT_TRUE(std::isnan(rows[1].log_price));
  EXPECT_DOUBLE_EQ(rows[2].log_price, std::log(70000.0));
}

TEST(Panel, ImputationKeepsIndicator) {
  const auto rows = panel::impute_prev_price(
      panel::build_panel({rec("l1", "o1", 2001, 1, 50000.0), rec("l2", "o1", 2004, 1, 60000.0)}));
  EXPECT_EQ(rows[0].prev_price, 0.0);
  EXPECT_FALSE(rows[0].has_prev);
  EXPECT_TRUE(rows[1].has_prev);
}

TEST(Panel, RejectsInvalidRecords) {
  EXPECT_EQ(kind_of([] {
              auto r = rec("l1", "o1", 2001, 1, std::nullopt);
              r.sold = true;
              panel::build_panel({r});
            }),
            ErrorKind::data);
  EXPECT_EQ(kind_of([] { panel::build_panel({rec("l1", "o1", 2001, 13, 1e5)}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] {
              auto r = rec("l1", "o1", 2001, 1, 1e5);
              r.estimate_low = 5e5;
              panel::build_panel({r});
            }),
            ErrorKind::data);
  EXPECT_EQ(kind_of([] { panel::build_panel({rec("l1", "o1", 2001, 1, 1e5), rec("l1", "o1", 2001, 1, 2e5)}); }),
            ErrorKind::data);
  EXPECT_EQ(kind_of([] { panel::build_panel({}); }), ErrorKind::invalid_argument);
}

TEST(Panel, FiltersAndRemapsRareLevels) {
  std::vector<TransactionRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back(rec("a" + std::to_string(i), "oa" + std::to_string(i), 2000, 1, 50000.0));
  auto cheap = rec("cheap", "oc", 2000, 1, 5000.0);
  auto noimg = rec("noimg", "on", 2000, 1, 50000.0);
  noimg.image_ref.reset();
  auto rare = rec("rare", "or", 2000, 1, 50000.0);
  rare.artist = "rare_artist";
  auto late = rec("late", "ol", 2020, 1, 50000.0);
  late.artist = "new_artist";
  recs.insert(recs.end(), {cheap, noimg, rare, late});
  panel::FilterOptions opt;
  opt.train_end_year = 2010;
  const auto f = panel::apply_filters(panel::build_panel(recs), opt);
  EXPECT_EQ(f.rows.size(), 32u);
  std::map<std::string, std::string> artist;
  for (const auto& r : f.rows) artist[r.lot_id] = r.artist;
  EXPECT_FALSE(artist.count("cheap"));
  EXPECT_FALSE(artist.count("noimg"));
  EXPECT_EQ(artist["rare"], "OTHER");
  EXPECT_EQ(artist["late"], "OTHER");
  EXPECT_EQ(artist["a0"], "a");
  EXPECT_EQ(f.kept_levels.at("artist"), std::set<std::string>{"a"});
  opt.train_end_year = 1990;
  EXPECT_EQ(kind_of([&] { panel::apply_filters(panel::build_panel(recs), opt); }), ErrorKind::invalid_argument);
}

// Invariants over a generated panel: chronological per object, first
// appearance fresh, anchor equals the latest earlier realized price.
TEST(Panel, GeneratedPanelInvariants) {
  for (std::uint64_t seed : {0u, 1u}) {
    auto cfg = synth::preset("anchored", seed);
    cfg.n_rows = 3000;
    const auto rows = panel::build_panel(synth::generate(cfg).records);
    std::map<std::string, std::optional<double>> last_sold;
    std::map<std::string, std::pair<int, int>> last_date;
    for (const auto& r : rows) {
      const bool seen = last_date.count(r.object_id) > 0;
      EXPECT_EQ(r.is_fresh, !seen) << r.lot_id;
      if (seen) {
        EXPECT_LE(last_date[r.object_id], std::make_pair(r.sale_year, r.sale_month));
      }
      const auto anchor = seen ? last_sold[r.object_id] : std::nullopt;
      EXPECT_EQ(r.prev_price, anchor) << r.lot_id;
      EXPECT_EQ(r.has_prev, anchor.has_value());
      if (r.is_fresh) {
        EXPECT_FALSE(r.has_prev);
      }
      last_date[r.object_id] = {r.sale_year, r.sale_month};
      if (r.sold) last_sold[r.object_id] = r.price;
    }
  }
}

TEST(Panel, CsvRoundTrip) {
  auto cfg = synth::preset("anchored", 3);
  cfg.n_rows = 500;
  const auto ds = synth::generate(cfg);
  const auto back = panel::records_from_table(csv::read_string(panel::records_to_csv(ds.records)));
  ASSERT_EQ(back.size(), ds.records.size());
  EXPECT_EQ(panel::records_to_csv(back), panel::records_to_csv(ds.records));

  const auto rows = panel::impute_prev_price(panel::build_panel(ds.records));
  const std::string path = testing::TempDir() + "panel_roundtrip.csv";
  {
    std::ofstream out(path);
    out << panel::panel_to_csv(rows);
  }
  const auto again = panel::read_panel(path);
  EXPECT_EQ(panel::panel_to_csv(again), panel::panel_to_csv(rows));
}

TEST(Panel, MissingColumnIsSchemaError) {
  EXPECT_EQ(kind_of([] { panel::records_from_table(csv::read_string("lot_id,object_id\n1,2\n")); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([] { csv::read_file("/nonexistent/records.csv"); }), ErrorKind::missing_artifact);
}

// ---------------------------------------------------------------------------
// Encoder

namespace {

std::vector<PanelRow> small_panel() {
  auto cfg = synth::preset("anchored", 5);
  cfg.n_rows = 2000;
  return panel::impute_prev_price(panel::build_panel(synth::generate(cfg).records));
}

}  // namespace

TEST(Encoder, PrevPriceScaledOnRepeatRowsOnly) {
  auto rows = small_panel();
  std::erase_if(rows, [](const PanelRow& r) { return !r.sold; });
  const auto enc = features::Encoder::fit(rows);
  const auto m = enc.transform(rows);
  const auto j = m.find("prev_price");
  ASSERT_TRUE(j.has_value());
  double sum = 0, sq = 0;
  int n = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j));
    if (!rows[i].has_prev) {
      EXPECT_EQ(v, 0.0);
      continue;
    }
    sum += v;
    sq += v * v;
    ++n;
  }
  ASSERT_GT(n, 100);
  EXPECT_NEAR(sum / n, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt((sq - sum * sum / n) / (n - 1)), 1.0, 1e-9);
}

TEST(Encoder, OneHotUsesTrainingVocabulary) {
  auto rows = small_panel();
  const auto enc = features::Encoder::fit(rows);
  auto probe = rows.front();
  probe.medium = "never_seen";
  const auto m = enc.transform({probe});
  for (std::size_t j = 0; j < m.column_names.size(); ++j)
    if (m.sources[j] == "medium") {
      EXPECT_EQ(m.values(0, static_cast<Eigen::Index>(j)), 0.0);
    }
  // each block belongs to one source and group
  for (const auto& [src, cols] : m.blocks())
    for (auto c : cols) EXPECT_EQ(m.groups[c], m.groups[cols.front()]) << src;
}

TEST(Encoder, JsonRoundTripTransformsIdentically) {
  const auto rows = small_panel();
  features::EncoderOptions opt;
  opt.groups.insert(features::Group::estimates);
  const auto enc = features::Encoder::fit(rows, opt);
  const auto back = features::Encoder::from_json(nlohmann::json::parse(enc.to_json().dump()));
  const auto a = enc.transform(rows);
  const auto b = back.transform(rows);
  EXPECT_EQ(a.column_names, b.column_names);
  EXPECT_TRUE(a.values == b.values);
}

TEST(Encoder, GroupSelectionDropsColumns) {
  const auto rows = small_panel();
  features::EncoderOptions opt;
  opt.groups = {features::Group::artist, features::Group::timing};
  const auto m = features::Encoder::fit(rows, opt).transform(rows);
  for (auto g : m.groups) EXPECT_TRUE(g == features::Group::artist || g == features::Group::timing);
  EXPECT_FALSE(m.find("prev_price").has_value());
}

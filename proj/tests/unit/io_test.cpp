#include "artval/csv.hpp"
#include "artval/embed.hpp"
#include "artval/svg.hpp"
#include "artval/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace artval;

namespace {

embed::EmbeddingTable sample_table() {
  embed::EmbeddingTable t(3, "resnet50-avgpool");
  t.add("lot_a", {0.5f, -1.25f, 3.0e-8f});
  t.add("lot_b", {1.0f, 2.0f, -0.0f});
  return t;
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

TEST(Aemb, RoundTripIsBitExact) {
  const auto t = sample_table();
  const auto bytes = embed::to_bytes(t);
  // header 4 + 4 + 4 + 8 + 2 + tag, records 2 + id + 3 * 4
  EXPECT_EQ(bytes.size(), 22u + 16u + 2 * (2 + 5 + 12));
  const auto back = embed::from_bytes(bytes);
  EXPECT_TRUE(back == t);
  EXPECT_EQ(embed::to_bytes(back), bytes);
  EXPECT_EQ(std::signbit(back.at("lot_b")[2]), true);

  const std::string path = testing::TempDir() + "t.aemb";
  embed::write_embeddings(t, path);
  EXPECT_TRUE(embed::read_embeddings(path) == t);
}

TEST(Aemb, HeaderIsLittleEndian) {
  const auto bytes = embed::to_bytes(sample_table());
  EXPECT_EQ(bytes.substr(0, 4), "AEMB");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2); // count
}

TEST(Aemb, RejectsMalformedInput) {
  const auto good = embed::to_bytes(sample_table());
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { embed::from_bytes(bad_magic); }), ErrorKind::schema);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(kind_of([&] { embed::from_bytes(bad_version); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([&] { embed::from_bytes(good.substr(0, good.size() - 1)); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([&] { embed::from_bytes(good + "x"); }), ErrorKind::schema);
  // header dim smaller than the records
  auto narrow = good;
  narrow[8] = 2;
  EXPECT_EQ(kind_of([&] { embed::from_bytes(narrow); }), ErrorKind::schema);
  // count larger than the records present
  auto more = good;
  more[12] = 3;
  EXPECT_EQ(kind_of([&] { embed::from_bytes(more); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([] { embed::read_embeddings("/nonexistent/x.aemb"); }), ErrorKind::missing_artifact);
}

TEST(Aemb, TableValidatesRows) {
  embed::EmbeddingTable t(2, "tag");
  EXPECT_EQ(kind_of([&] { t.add("x", {1.0f}); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([&] { t.add("x", {1.0f, NAN}); }), ErrorKind::data);
  t.add("x", {1.0f, 2.0f});
  EXPECT_EQ(kind_of([&] { t.add("x", {1.0f, 2.0f}); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([&] { t.at("y"); }), ErrorKind::data);
}

TEST(Csv, QuotingRoundTrip) {
  csv::Writer w({"a", "b"});
  w.row({"plain", "with,comma"}).row({"say \"hi\"", "two\nlines"});
  const auto t = csv::read_string(w.str());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "with,comma");
  EXPECT_EQ(t.rows[1][0], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "two\nlines");
}

TEST(Csv, RejectsRaggedRowsAndBadNumbers) {
  EXPECT_THROW(csv::read_string("a,b\n1\n"), Error);
  EXPECT_EQ(kind_of([] { csv::parse_double("1.5x", "ctx"); }), ErrorKind::schema);
  EXPECT_EQ(kind_of([] { csv::parse_int("2.5", "ctx"); }), ErrorKind::schema);
  EXPECT_DOUBLE_EQ(csv::parse_double("1e3", "ctx"), 1000.0);
}

TEST(Svg, RenderingIsDeterministic) {
  svg::Chart c;
  c.title = "t <&>";
  c.series.push_back({"line", svg::SeriesKind::line, {0, 1, 2}, {1, 4, 9}, {}});
  c.series.push_back({"pts", svg::SeriesKind::scatter, {0.5, 1.5}, {2, NAN}, {}});
  const auto a = svg::render(c);
  EXPECT_EQ(a, svg::render(c));
  EXPECT_NE(a.find("t &lt;&amp;&gt;"), std::string::npos);
  EXPECT_EQ(a.find("nan"), std::string::npos);
  EXPECT_EQ(a.find("<svg"), 0u);
  c.series[0].y.pop_back();
  EXPECT_THROW(svg::render(c), Error);
}

TEST(Svg, BarChartWithLabels) {
  svg::Chart c;
  c.series.push_back({"gain", svg::SeriesKind::bar, {0, 1, 2}, {0.3, -0.1, 0.2}, {"oil", "acrylic", "photo"}});
  const auto s = svg::render(c);
  EXPECT_NE(s.find(">acrylic</text>"), std::string::npos);
  std::size_t rects = 0;
  for (auto p = s.find("<rect"); p != std::string::npos; p = s.find("<rect", p + 1)) ++rects;
  EXPECT_EQ(rects, 2u + 3u + 1u);  // background, frame, bars, legend swatch
}

TEST(Svg, HistogramCountsAndDensity) {
  const std::vector<double> v = {0.0, 0.1, 0.5, 0.9, 1.0, 2.0, NAN};
  const auto h = svg::histogram(v, 2, 0.0, 1.0);
  EXPECT_EQ(h.counts, (std::vector<double>{2, 3}));
  const auto s = svg::histogram_series("h", h);
  EXPECT_NEAR((s.y[0] + s.y[1]) * 0.5, 1.0, 1e-12);
}

TEST(Synth, SameSeedSameData) {
  auto cfg = synth::preset("anchored", 4);
  cfg.n_rows = 800;
  const auto a = synth::generate(cfg);
  const auto b = synth::generate(cfg);
  EXPECT_EQ(panel::records_to_csv(a.records), panel::records_to_csv(b.records));
  EXPECT_EQ(embed::to_bytes(a.embeddings), embed::to_bytes(b.embeddings));
  EXPECT_EQ(synth::truth_csv(a.truth), synth::truth_csv(b.truth));
  cfg.seed = 5;
  EXPECT_NE(panel::records_to_csv(synth::generate(cfg).records), panel::records_to_csv(a.records));
}

TEST(Synth, TruthDecomposesValue) {
  auto cfg = synth::preset("anchored", 6);
  cfg.n_rows = 1000;
  const auto ds = synth::generate(cfg);
  ASSERT_EQ(ds.truth.size(), ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& t = ds.truth[i];
    EXPECT_NEAR(t.value, cfg.base_log_price + t.artist + t.object + t.visual + t.trend + t.house + t.shock, 1e-9);
    if (ds.records[i].sold) {
      EXPECT_NEAR(std::log(*ds.records[i].price), t.value + t.noise, 1e-6);
    }
    EXPECT_TRUE(ds.embeddings.contains(ds.records[i].lot_id));
  }
}

TEST(Synth, UnknownPresetIsInvalidArgument) {
  EXPECT_EQ(kind_of([] { synth::preset("nope"); }), ErrorKind::invalid_argument);
}

#include "support/cli_runner.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace fs = std::filesystem;
using namespace artval::testing_support;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("artval_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("train --help"), 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("synth"), 2);  // --out missing
  EXPECT_EQ(run_cli("synth --out " + dir.string() + " --preset nope"), 2);
  EXPECT_EQ(run_cli("train --out " + dir.string() + " --panel x.csv --model forest"), 2);
  EXPECT_EQ(run_cli("train --out " + dir.string() + " --panel x.csv --d-image 0"), 2);
}

TEST(Cli, ExitCodesByFailureKind) {
  const auto dir = scratch("codes");
  const auto data = dir / "data";
  ASSERT_EQ(run_cli("synth --preset small --n-rows 1500 --out " + data.string()), 0);
  const std::string rec = " --panel " + (data / "records.csv").string();

  // missing input artifact
  EXPECT_EQ(run_cli("train --panel /nonexistent.csv --out " + (dir / "a").string()), 3);
  EXPECT_EQ(run_cli("eval --model-dir " + (dir / "none").string() + " --out " + (dir / "b").string()), 3);
  EXPECT_EQ(run_cli("pca --embeddings /nonexistent.aemb --out " + (dir / "c").string()), 3);

  // schema: corrupted magic, missing column
  {
    std::ofstream(dir / "bad.aemb") << "XEMB1234";
    std::ofstream(dir / "bad.csv") << "lot_id,price\n1,2\n";
  }
  EXPECT_EQ(run_cli("pca --embeddings " + (dir / "bad.aemb").string() + " --out " + (dir / "d").string()), 4);
  EXPECT_EQ(run_cli("train --panel " + (dir / "bad.csv").string() + " --out " + (dir / "e").string()), 4);

  // data: a sold row without a price
  {
    std::ifstream in(data / "records.csv");
    std::ofstream out(dir / "noprice.csv");
    std::string line;
    std::getline(in, line);
    out << line << "\n";
    std::getline(in, line);
    // price is the third column
    auto a = line.find(',');
    auto b = line.find(',', a + 1);
    auto c = line.find(',', b + 1);
    out << line.substr(0, b + 1) << line.substr(c) << "\n";
  }
  EXPECT_EQ(run_cli("prep --panel " + (dir / "noprice.csv").string() + " --out " + (dir / "f").string()), 5);

  // overlapping windows are an argument error
  EXPECT_EQ(run_cli("train --train-years 1990:2022 --test-years 2022:2024" + rec + " --out " + (dir / "g").string()),
            2);
  // mmnet without embeddings
  EXPECT_EQ(run_cli("train --model mmnet" + rec + " --out " + (dir / "h").string()), 2);
}

TEST(Cli, EverySubcommandIsDeterministic) {
  const auto base = scratch("determinism");
  const auto data = base / "run1" / "synth";
  const auto model = base / "run1" / "train";
  for (const std::string run : {"run1", "run2"}) {
    for (const auto& inv : all_subcommands(data.string(), model.string(), 2500)) {
      const auto out = base / run / inv.name;
      const auto log = base / (run + "_" + inv.name + ".log");
      ASSERT_EQ(run_cli(inv.args + " --out " + out.string(), log.string()), 0) << inv.name << ": " << slurp(log);
    }
  }
  for (const auto& inv : all_subcommands(data.string(), model.string(), 2500)) {
    const auto a = base / "run1" / inv.name;
    EXPECT_TRUE(fs::exists(a / "run_config.json")) << inv.name;
    EXPECT_TRUE(differing_files(a, base / "run2" / inv.name).empty()) << inv.name;
  }
  EXPECT_TRUE(fs::exists(base / "run1" / "eval" / "metrics.json"));
  EXPECT_TRUE(fs::exists(base / "run1" / "eval" / "residual_hist.svg"));
  EXPECT_TRUE(fs::exists(base / "run1" / "classify" / "roc.svg"));
}

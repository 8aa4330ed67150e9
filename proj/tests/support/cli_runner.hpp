#pragma once

// Runs the artval binary as a subprocess and compares output directories.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#ifndef ARTVAL_CLI_PATH
#error "ARTVAL_CLI_PATH must name the artval executable"
#endif

namespace artval::testing_support {

inline int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(ARTVAL_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Files present in `a` (run_config.json excluded, it names the directory)
// that are missing from `b` or differ byte-wise.
inline std::vector<std::string> differing_files(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(a)) {
    const auto name = e.path().filename().string();
    if (name == "run_config.json" || !e.is_regular_file()) continue;
    if (!std::filesystem::exists(b / name) || slurp(e.path()) != slurp(b / name)) out.push_back(name);
  }
  return out;
}

struct Invocation {
  std::string name;
  std::string args;  // without --out
};

// One invocation per subcommand over a synthetic dataset in `data`; train
// writes into `model`, which eval and importance read back.
inline std::vector<Invocation> all_subcommands(const std::string& data, const std::string& model, int n_rows) {
  const std::string rec = " --panel " + data + "/records.csv";
  const std::string emb = " --embeddings " + data + "/embeddings.aemb";
  return {
      {"synth", "synth --preset small --seed 3 --n-rows " + std::to_string(n_rows)},
      {"prep", "prep" + rec},
      {"train", "train --model mmnet --epochs 4 --seed 2" + rec + emb},
      {"eval", "eval --model-dir " + model},
      {"importance", "importance --repeats 2 --seed 1 --model-dir " + model},
      {"ablate", "ablate --epochs 2 --d-image 10" + rec + emb},
      {"stack", "stack --rounds 20 --folds 3" + rec},
      {"classify", "classify --model boost --rounds 30 --repeats 2" + rec},
      {"pca", "pca" + rec + emb},
      {"report", "report --epochs 2 --rounds 20" + rec + emb},
  };
}

}  // namespace artval::testing_support

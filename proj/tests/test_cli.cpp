#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <fmt/core.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rheo/evaluation.hpp"
#include "rheo/serialization.hpp"

namespace fs = std::filesystem;
using namespace rheo;

namespace {

struct Scratch {
  fs::path dir = fs::temp_directory_path() / fmt::format("rheo-cli-{}", ::getpid());
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
};

int cli(const std::string& args) {
  const int rc = std::system(fmt::format("{} {} > /dev/null 2>&1", RHEO_CLI_PATH, args).c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage and validation errors exit 1") {
  Scratch s;
  const auto d = s.dir.string();
  CHECK(cli("") == 1);
  CHECK(cli("synth --out " + d + "/x") == 1);
  CHECK(cli("synth --seed 1 --n-chem 0 --out " + d + "/x") == 1);
  CHECK(cli("train --seed 1 --kind svm --dataset /nonexistent --out " + d + "/x") == 1);
  std::ofstream(s.dir / "bad.json") << "{";
  CHECK(cli("predict --seed 1 --model " + d + "/bad.json --dataset " + d + "/bad.json --out " + d + "/x") == 1);
  CHECK(cli("synth --help") == 0);
}

TEST_CASE("config file values yield to explicit flags") {
  Scratch s;
  const auto d = s.dir.string();
  std::ofstream(s.dir / "cfg.json") << R"({"seed": 3, "n_chem": 4, "pts": 10, "noise_sigma": 0.05})";
  REQUIRE(cli("synth --config " + d + "/cfg.json --pts 6 --out " + d + "/a") == 0);
  CHECK(lines(s.dir / "a/dataset.csv") == 1 + 4 * 6);
  const auto m = io::read_json(s.dir / "a/manifest.json");
  CHECK(m.at("seed") == 3);
  CHECK(m.at("settings").at("pts") == 6);
  CHECK(m.at("outputs").contains("dataset.csv"));
  CHECK(m.at("outputs").contains("truth.json"));
}

TEST_CASE("evaluation tallies cover every sweep") {
  Scratch s;
  const auto d = s.dir.string();
  REQUIRE(cli("synth --seed 5 --n-chem 20 --pts 12 --noise-sigma 0.05 --out " + d + "/syn") == 0);
  REQUIRE(cli("split --seed 5 --dataset " + d + "/syn/dataset.csv --variable shear --out " + d + "/sp") == 0);
  REQUIRE(cli("train --seed 5 --kind ann --max-epochs 5 --layer-size 16 --dataset " + d + "/sp/train.csv --out " +
               d + "/m") == 0);
  REQUIRE(cli("evaluate --seed 5 --variable shear --model " + d + "/m/model.json --dataset " + d +
               "/sp/test.csv --truth " + d + "/syn/truth.json --out " + d + "/ev") == 0);
  const auto r = eval::report_from_json(io::read_json(s.dir / "ev/report.json"));
  CHECK(r.tallies.total() == r.sweeps.size());
  CHECK(r.sweeps.size() == 2);
  REQUIRE(cli("report --seed 5 --report " + d + "/ev/report.json --out " + d + "/rep") == 0);
  CHECK(lines(s.dir / "rep/outcomes.csv") == 1 + r.sweeps.size());
  CHECK(lines(s.dir / "rep/curves.csv") == 1 + r.curves.size() * eval::kDefaultSweepPoints);
}

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = ENSWEIGHT_CLI_PATH;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(ENSWEIGHT_SCRATCH_DIR) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with `args`, discarding its console output, and returns the
// process exit status.
int run(const std::string& args, const fs::path& log = {}) {
  const std::string sink = log.empty() ? "/dev/null" : log.string();
  const std::string cmd = kCli + " " + args + " >" + sink + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string reference_csv() { return testing::fixture("reference_accuracy.csv"); }
std::string synth_acc() { return testing::fixture("synthetic_accuracy.csv"); }
std::string synth_pred() { return testing::fixture("synthetic_predictions.csv"); }

}  // namespace

TEST_CASE("optimize writes weights and a report") {
  const auto dir = scratch("optimize");
  CHECK(run("optimize --accuracy " + reference_csv() + " -K 3 --weights " + (dir / "w.csv").string() +
            " --report " + (dir / "r.json").string()) == 0);
  const std::string weights = slurp(dir / "w.csv");
  CHECK(weights.rfind("# generated ", 0) == 0);
  CHECK(weights.find("classifier,N1,A1,A2,A3,A4,selected") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(report.contains("generated_at"));
  CHECK(report.at("solution").at("constraints").at("conformant").get<bool>());
  CHECK(report.at("solution").at("selection").size() == 3);
}

TEST_CASE("timestamps can be suppressed") {
  const auto dir = scratch("notime");
  CHECK(run("--no-timestamp optimize --accuracy " + reference_csv() + " -K 3 --weights " +
            (dir / "w.csv").string() + " --report " + (dir / "r.json").string()) == 0);
  CHECK(slurp(dir / "w.csv").rfind("classifier,", 0) == 0);
  CHECK_FALSE(nlohmann::json::parse(slurp(dir / "r.json")).contains("generated_at"));
}

TEST_CASE("infeasible inputs exit with code 3") {
  const auto dir = scratch("infeasible");
  write(dir / "same.csv", "classifier,a,b\nX,0.7,0.4\nY,0.7,0.4\nZ,0.7,0.4\n");
  CHECK(run("optimize --accuracy " + (dir / "same.csv").string() + " -K 2") == 3);
  write(dir / "one.csv", "classifier,a\nX,0.9\n");
  CHECK(run("optimize --accuracy " + (dir / "one.csv").string() + " -K 1") == 3);
}

TEST_CASE("bad input and configuration exit with code 2") {
  const auto dir = scratch("bad");
  write(dir / "ragged.csv", "classifier,a,b\nX,0.7\n");
  CHECK(run("optimize --accuracy " + (dir / "ragged.csv").string() + " -K 1") == 2);
  CHECK(run("optimize --accuracy " + reference_csv() + " -K 9") == 2);
  CHECK(run("optimize --accuracy " + reference_csv() + " -K 3 --alpha 1.5") == 2);
  CHECK(run("optimize --accuracy " + reference_csv()) == 2);
  CHECK(run("optimize --accuracy " + (dir / "missing.csv").string() + " -K 2") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("validate exits with code 4 on a non-conformant weight file") {
  const auto dir = scratch("validate");
  const auto w = (dir / "w.csv").string();
  REQUIRE(run("optimize --accuracy " + reference_csv() + " -K 3 --weights " + w) == 0);
  CHECK(run("validate --accuracy " + reference_csv() + " --weights " + w) == 0);

  write(dir / "bad.csv",
        "classifier,N1,A1,A2,A3,A4,selected\n"
        "MLR,0.5,0.5,0.5,0.5,0.5,1\nJ48,0.4,0.5,0.5,0.5,0.5,1\n"
        "JRIP,0,0,0,0,0,0\nREPTree,0,0,0,0,0,0\nMLP,0,0,0,0,0,0\n"
        "SVM,0,0,0,0,0,0\nGNB,0,0,0,0,0,0\nIBk,0,0,0,0,0,0\n");
  const auto log = dir / "log.txt";
  CHECK(run("validate --accuracy " + reference_csv() + " --weights " + (dir / "bad.csv").string() +
                " --report " + (dir / "r.json").string(),
            log) == 4);
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK_FALSE(report.at("constraints").at("conformant").get<bool>());
}

TEST_CASE("a config file supplies the same options as flags") {
  const auto dir = scratch("config");
  write(dir / "run.toml", "no-timestamp = true\n[optimize]\nK = 4\nlambda = 0.5\nalpha = 0.3\n");
  CHECK(run("--config " + (dir / "run.toml").string() + " optimize --accuracy " + reference_csv() +
            " --weights " + (dir / "a.csv").string()) == 0);
  CHECK(run("--no-timestamp optimize --accuracy " + reference_csv() +
            " -K 4 --lambda 0.5 --alpha 0.3 --weights " + (dir / "b.csv").string()) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  write(dir / "broken.toml", "[optimize]\nK = [\n");
  CHECK(run("--config " + (dir / "broken.toml").string() + " optimize --accuracy " + reference_csv()) ==
        2);
}

TEST_CASE("repeated runs are byte identical across worker counts") {
  const auto d = scratch("determinism");
  const std::string acc = synth_acc();
  const std::string pred = synth_pred();
  std::vector<std::map<std::string, std::string>> outputs;
  for (const std::string workers : {"--workers 1", "--workers 4", "--deterministic"}) {
    const std::string common = "--no-timestamp " + workers + " ";
    REQUIRE(run(common + "optimize --accuracy " + acc + " -K 3 --weights " +
                (d / "w.csv").string() + " --report " + (d / "o.json").string()) == 0);
    REQUIRE(run(common + "baselines --accuracy " + acc + " -K 3 --out-dir " +
                (d / "base").string()) == 0);
    REQUIRE(run(common + "evaluate --weights " + (d / "w.csv").string() + " --predictions " +
                pred + " --report " + (d / "e.json").string()) == 0);
    REQUIRE(run(common + "sweep --accuracy " + acc + " --predictions " + pred +
                " --k-max 4 --table " + (d / "s.csv").string() + " --report " +
                (d / "s.json").string()) == 0);
    auto& files = outputs.emplace_back();
    for (const auto& entry : fs::recursive_directory_iterator(d)) {
      if (entry.is_regular_file()) files[fs::relative(entry.path(), d).string()] = slurp(entry.path());
    }
    fs::remove_all(d);
    fs::create_directories(d);
  }
  CHECK(outputs[0].size() == 12);
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);
}

TEST_CASE("resample is seeded") {
  const auto dir = scratch("resample");
  std::string labels = "instance_id,label\n";
  for (int k = 0; k < 60; ++k) labels += "i" + std::to_string(k) + "," + (k < 45 ? "big" : (k < 55 ? "mid" : "small")) + "\n";
  write(dir / "labels.csv", labels);
  const std::string base = "--no-timestamp resample --labels " + (dir / "labels.csv").string() + " --rho 5 ";
  CHECK(run("--seed 7 " + base + "--indices " + (dir / "a.csv").string() + " --report " + (dir / "a.json").string()) == 0);
  CHECK(run("--seed 7 " + base + "--indices " + (dir / "b.csv").string() + " --report " + (dir / "b.json").string()) == 0);
  CHECK(run("--seed 8 " + base + "--indices " + (dir / "c.csv").string() + " --report " + (dir / "c.json").string()) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
  CHECK(run(base + "--mode step --r 1 --indices " + (dir / "d.csv").string() + " --report " + (dir / "d.json").string()) == 0);
  CHECK(run(base + "--mode step --r 3") == 2);
}

TEST_CASE("sweep covers every K for every baseline with finite values") {
  const auto dir = scratch("sweep");
  REQUIRE(run("--no-timestamp sweep --accuracy " + synth_acc() + " --predictions " +
              synth_pred() + " --table " + (dir / "t.csv").string() + " --report " +
              (dir / "t.json").string()) == 0);
  std::istringstream table(slurp(dir / "t.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "K,uw-pc,uw-pcc,wa-pc,wa-pcc,de,bma");
  int rows = 0;
  while (std::getline(table, line)) {
    std::istringstream cells(line);
    std::string cell;
    int cols = 0;
    while (std::getline(cells, cell, ',')) {
      if (cols > 0) CHECK(std::isfinite(std::stod(cell)));
      ++cols;
    }
    CHECK(cols == 7);
    ++rows;
  }
  CHECK(rows == 7);
  CHECK(run("sweep --accuracy " + synth_acc() + " --predictions " + synth_pred() +
            " --k-min 1") == 2);
}

TEST_CASE("tune reports parameters and a score") {
  const auto dir = scratch("tune");
  REQUIRE(run("--no-timestamp tune --accuracy " + synth_acc() + " --predictions " +
              synth_pred() + " -K 3 --lambda-step 0.05 --alpha-step 0.05 --max-moves 5" +
              " --weights " + (dir / "w.csv").string() + " --report " +
              (dir / "r.json").string()) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(report.contains("score"));
  CHECK(report.at("lambda").get<double>() >= 0.0);
  CHECK(fs::exists(dir / "w.csv"));
}

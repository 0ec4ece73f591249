#include "kbm/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("kbm_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KBM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("simulate is byte-identical across runs") {
  TempDir tmp;
  const fs::path out = tmp.path / "run.ndjson";
  const std::string base = "--model sphere --sigma-diag 1,4,9 --trajectories 4 --horizon 0.5 "
                           "--step 1e-3 --seed 99 --output-stride 50 --output " +
                           out.string() + " simulate";
  CHECK(run_cli(base) == 0);
  const std::string first = slurp(out);
  CHECK(run_cli(base) == 0);
  CHECK(first == slurp(out));
  CHECK(!first.empty());
}

TEST_CASE("header config reproduces the file byte-identically") {
  TempDir tmp;
  const fs::path first = tmp.path / "a.ndjson", second = tmp.path / "b.ndjson";
  CHECK(run_cli("--model ou --sigma-diag 2,3 --trajectories 3 --horizon 1 --step 0.01 --seed 7 "
                "--output-stride 10 --output " +
                first.string() + " simulate") == 0);
  std::ifstream in(first);
  const auto parsed = kbm::parse_output(in, kbm::OutputFormat::kNdjson);
  REQUIRE(parsed.header.contains("config"));

  // write the resolved config as a CLI11 key=value file and re-run from it
  const fs::path cfg_path = tmp.path / "rerun.ini";
  {
    std::ofstream cfg(cfg_path);
    for (const auto& [key, value] : parsed.header["config"].items()) {
      if (key == "subcommand" || key == "output") continue;
      if (value.is_array()) {
        cfg << key << "=";
        for (std::size_t i = 0; i < value.size(); ++i)
          cfg << (i ? "," : "") << value[i].dump();
        cfg << "\n";
      } else if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (!s.empty()) cfg << key << "=" << s << "\n";
      } else {
        cfg << key << "=" << value.dump() << "\n";
      }
    }
  }
  CHECK(run_cli("--config " + cfg_path.string() + " --output " + second.string() + " simulate") ==
        0);
  const std::string a = slurp(first), b = slurp(second);
  // identical except the echoed output path inside the headers
  auto strip_output = [](std::string s) {
    const auto pos = s.find("\"output\":");
    if (pos != std::string::npos) {
      const auto end = s.find(',', pos);
      s.erase(pos, end - pos);
    }
    return s;
  };
  CHECK(strip_output(a) == strip_output(b));
}

TEST_CASE("ndjson output reparses into its records") {
  TempDir tmp;
  const fs::path out = tmp.path / "run.ndjson";
  CHECK(run_cli("--model spin2d --trajectories 2 --horizon 0.2 --step 1e-2 --seed 5 "
                "--output-stride 5 --output " +
                out.string() + " simulate") == 0);
  std::ifstream in(out);
  const auto parsed = kbm::parse_output(in, kbm::OutputFormat::kNdjson);
  CHECK(parsed.header["schema"] == kbm::kSchemaVersion);
  CHECK(parsed.records.size() == 2 * 5);  // 2 trajectories x (20 steps / stride 5 + endpoint)
  for (const auto& rec : parsed.records) {
    CHECK(rec["kind"] == "path-point");
    CHECK(rec["x"].size() == 2);
    CHECK(rec["v"].size() == 2);
  }
}

TEST_CASE("csv path dump round-trips against the ndjson run") {
  TempDir tmp;
  const std::string base = "--model ou --sigma-diag 1,4 --trajectories 2 --horizon 0.3 "
                           "--step 1e-2 --seed 11 --output-stride 10 ";
  const fs::path nd = tmp.path / "a.ndjson", cs = tmp.path / "a.csv";
  CHECK(run_cli(base + "--output " + nd.string() + " simulate") == 0);
  CHECK(run_cli(base + "--format csv --output " + cs.string() + " simulate") == 0);
  std::ifstream in1(nd), in2(cs);
  const auto a = kbm::parse_output(in1, kbm::OutputFormat::kNdjson);
  const auto b = kbm::parse_output(in2, kbm::OutputFormat::kCsv);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k]["traj"] == b.records[k]["traj"]);
    CHECK(a.records[k]["t"].get<double>() == b.records[k]["t"].get<double>());
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(a.records[k]["x"][i].get<double>() == b.records[k]["x"][i].get<double>());
      CHECK(a.records[k]["v"][i].get<double>() == b.records[k]["v"][i].get<double>());
    }
  }
}

TEST_CASE("lift emits antisymmetric areas") {
  TempDir tmp;
  const fs::path out = tmp.path / "lift.ndjson";
  CHECK(run_cli("--model spin2d --trajectories 3 --sigma 1,1.5 --horizon 1 --step 1e-2 --seed 3 "
                "--output " +
                out.string() + " lift") == 0);
  std::ifstream in(out);
  const auto parsed = kbm::parse_output(in, kbm::OutputFormat::kNdjson);
  CHECK(parsed.records.size() == 6);  // 3 trajectories x 2 sigmas
  for (const auto& rec : parsed.records) {
    CHECK(rec["kind"] == "lift");
    const double a01 = rec["levy"][0][1].get<double>();
    const double a10 = rec["levy"][1][0].get<double>();
    CHECK(a01 == -a10);
    // Sym(second) = delta (x) delta / 2 for a lifted path
    const double d0 = rec["delta"][0].get<double>(), d1 = rec["delta"][1].get<double>();
    const double s01 = rec["second"][0][1].get<double>(), s10 = rec["second"][1][0].get<double>();
    CHECK(0.5 * (s01 + s10) == doctest::Approx(0.5 * d0 * d1).epsilon( 1e-9));
  }
}

TEST_CASE("develop emits frame points on the requested manifold") {
  TempDir tmp;
  const fs::path out = tmp.path / "dev.ndjson";
  CHECK(run_cli("--model sphere --sigma-diag 1,2 --manifold sphere2 --trajectories 2 --horizon 0.4 "
                "--sigma 1.4 --step 1e-2 --develop-step 1e-2 --seed 13 --output-stride 4 --output " +
                out.string() + " develop") == 0);
  std::ifstream in(out);
  const auto parsed = kbm::parse_output(in, kbm::OutputFormat::kNdjson);
  CHECK(parsed.records.size() > 0);
  for (const auto& rec : parsed.records) {
    CHECK(rec["kind"] == "frame-point");
    CHECK(rec["q"].size() == 2);
    CHECK(rec["e"].size() == 2);
  }
}

TEST_CASE("estimate reports gamma for the ou model") {
  TempDir tmp;
  const fs::path out = tmp.path / "est.ndjson";
  CHECK(run_cli("--model ou --sigma-diag 1,4,9 --trajectories 600 --sigma 2.6591 "
                "--estimate-horizon 4000 --lag-step 0.05 --lag-count 200 --step 0.01 --seed 21 "
                "--output " +
                out.string() + " estimate") == 0);
  std::ifstream in(out);
  const auto parsed = kbm::parse_output(in, kbm::OutputFormat::kNdjson);
  bool saw_autocov = false, saw_gamma = false, saw_mixing = false, saw_drift = false;
  for (const auto& rec : parsed.records) {
    REQUIRE(rec["kind"] == "report");
    const std::string name = rec["name"];
    if (name == "autocovariance") saw_autocov = true;
    if (name == "mixing-time") {
      saw_mixing = true;
      CHECK(rec["payload"]["tau"].get<double>() == doctest::Approx(1.0).epsilon(0.2));
    }
    if (name == "gamma-autocov" || name == "gamma-ensemble") {
      saw_gamma = true;
      const auto g = rec["payload"]["gamma"];
      CHECK(g[0].get<double>() == doctest::Approx(1.0).epsilon(0.15));
      CHECK(g[1].get<double>() == doctest::Approx(4.0).epsilon(0.15));
      CHECK(g[2].get<double>() == doctest::Approx(9.0).epsilon(0.15));
    }
    if (name == "levy-drift") saw_drift = true;
  }
  CHECK(saw_autocov);
  CHECK(saw_gamma);
  CHECK(saw_mixing);
  CHECK(saw_drift);
}

TEST_CASE("exit codes") {
  SUBCASE("config validation failure is exit 2") {
    CHECK(run_cli("--horizon -1 simulate") == 2);
    CHECK(run_cli("--model unknown-model simulate") == 2);
    CHECK(run_cli("--format csv estimate") == 2);
  }
  SUBCASE("budget cap exceeded is exit 3") {
    CHECK(run_cli("--model sphere --trajectories 100000 --horizon 100 --step 1e-6 "
                  "--budget-cap 1e6 simulate") == 3);
  }
  SUBCASE("numerical failure is exit 4") {
    // a long development on the half-plane drifts to the boundary
    // (log y ~ B_t - t/2) and exits the chart, which maps to exit 4
    CHECK(run_cli("--model walk --dim 2 --manifold hyperbolic2 --trajectories 1 --horizon 200 "
                  "--step 0.05 --develop-step 0.05 --seed 2 develop") == 4);
  }
}

TEST_SUITE_END();

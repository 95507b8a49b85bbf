#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = H2AD_CLI;
const std::string kConfigs = H2AD_CONFIG_DIR;
const std::string kTmp = H2AD_TMP_DIR;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  fs::create_directories(kTmp);
  const std::string out = kTmp + "/stdout.txt", err = kTmp + "/stderr.txt";
  const std::string cmd = "cd '" + kTmp + "' && '" + kCli + "' " + args + " > '" + out + "' 2> '" + err + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string table1() { return "--config '" + kConfigs + "/table1.cfg'"; }

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("").code == 2);
  const Run r = run("frobnicate");
  CHECK(r.code == 2);
  CHECK(r.err.find("Subcommands") != std::string::npos);
  CHECK(run("estimate " + table1() + " --no-such-flag").code == 2);
  CHECK(run("validate").code == 2);  // --config required
  CHECK(run("--help").code == 0);
}

TEST_CASE("validate") {
  const Run ok = run("validate " + table1());
  CHECK(ok.code == 0);
  CHECK(ok.out.find("Q=3 N=496") != std::string::npos);

  std::ofstream(kTmp + "/unknown.cfg") << "groups = 3\nM = 7, 11, 13\nK = 16, 16, 16\nbogus = 1\n";
  CHECK(run("validate --config unknown.cfg").code == 2);
  std::ofstream(kTmp + "/noncoprime.cfg") << "groups = 2\nM = 6, 9\nK = 16, 16\n";
  CHECK(run("validate --config noncoprime.cfg").code == 2);
  CHECK(run("validate --config missing.cfg").code == 2);
}

TEST_CASE("estimate is seeded and close at 10 dB") {
  const Run a = run("estimate " + table1() + " --theta 41 --snr 10 --seed 5 --json");
  const Run b = run("estimate " + table1() + " --theta 41 --snr 10 --seed 5 --json");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["theta_deg"].get<double>() == doctest::Approx(41.0).epsilon(0.002));
  CHECK(j["tuple_deg"].size() == 3);
  CHECK_FALSE(j.contains("candidates"));

  const auto d = nlohmann::json::parse(run("estimate " + table1() + " --seed 5 --json --dump-candidates").out);
  REQUIRE(d["candidates"].size() == 3);
  CHECK(d["candidates"][0]["angles_deg"].size() == 7);
  CHECK(d["candidates"][2]["angles_deg"].size() == 13);

  CHECK(run("estimate " + table1() + " --method nope").code == 2);
  CHECK(run("estimate " + table1() + " --theta 95").code == 2);
}

TEST_CASE("simulate then estimate from files") {
  REQUIRE(run("simulate " + table1() + " --theta -20 --snr 15 --seed 3 --out snap").code == 0);
  const std::string files = " --input snap_g2.snap --input snap_g0.snap --input snap_g1.snap";
  const Run r = run("estimate " + table1() + files);
  REQUIRE(r.code == 0);
  CHECK(std::stod(r.out.substr(r.out.find(' '))) == doctest::Approx(-20.0).epsilon(0.002));

  CHECK(run("estimate " + table1() + " --input snap_g0.snap").code == 2);
  CHECK(run("estimate " + table1() + " --input snap_g0.snap --input snap_g1.snap --input gone.snap").code == 3);
}

TEST_CASE("dataset, train, predict, bench") {
  REQUIRE(run("dataset " + table1() + " --theta-grid -60:30:60 --snr-grid 0,10 --trials 2 --snapshots 50 --out d.csv")
              .code == 0);
  const std::string csv = slurp(kTmp + "/d.csv");
  CHECK(csv.rfind("snr_db,theta_true,label_1,label_2,label_3,feat_1,", 0) == 0);

  CHECK(run("train " + table1() + " --data d.csv --epochs 3 --stage bogus --out m.bin").code == 2);
  REQUIRE(run("train " + table1() + " --data d.csv --epochs 3 --out m.bin").code == 0);
  CHECK(slurp(kTmp + "/m.bin").rfind("MBDNN1", 0) == 0);
  CHECK(run("train " + table1() + " --data d.csv --epochs 2 --stage joint --model m.bin --out m2.bin").code == 0);

  CHECK(run("predict " + table1() + " --model m.bin").code == 0);
  CHECK(run("predict --config '" + kConfigs + "/fig7_m11_13_17.cfg' --model m.bin").code == 2);
  std::ofstream(kTmp + "/junk.bin") << "not a model";
  CHECK(run("predict " + table1() + " --model junk.bin").code == 3);

  const std::string bench = "bench " + table1() +
                            " --snr-grid 0,10 --snapshots 50 --trials 4 --no-timing"
                            " --methods crlb_ratio,mbdnn --model m.bin";
  const Run a = run(bench + " --emit-plot-data plot");
  const Run b = run(bench);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("method,snr_db,snapshots,K,rmse_deg,crlb_fused_deg,trials_used,failures,wall_ms\n", 0) == 0);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 5);
  CHECK(fs::exists(kTmp + "/plot_crlb_ratio.dat"));
  CHECK(fs::exists(kTmp + "/plot_mbdnn.dat"));

  CHECK(run("bench " + table1() + " --methods mbdnn --trials 2").code == 2);
  CHECK(run("bench " + table1() + " --trials 0").code == 2);
}

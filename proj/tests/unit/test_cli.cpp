#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "helpers.hpp"
#include "tailtopo/csv.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/tpdm.hpp"

namespace fs = std::filesystem;
using tailtopo::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("simulate, tpdm, ctd, cluster, evaluate, pipeline") {
  const auto dir = testutil::tmp_dir("cli_flow");
  const auto sim = (dir / "sim").string();
  REQUIRE(call({"simulate", "--n", "10", "--blocks", "300", "--seed", "4", "--out", sim}).code == 0);
  REQUIRE(fs::exists(dir / "sim" / "truth.json"));
  REQUIRE(fs::exists(dir / "sim" / "sub001.csv"));

  const auto stdz = (dir / "z.csv").string();
  CHECK(call({"standardize", "--input", sim + "/sub001.csv", "--output", stdz}).code == 0);
  const auto tp = (dir / "t.csv").string();
  CHECK(call({"tpdm", "--input", stdz, "--output", tp, "--tail-quantile", "0.9", "--partition",
              "X1,X2,X3,X4,X5,X6:Y1,Y2,Y3,Y4,Y5,Y6"})
            .code == 0);
  const auto t = tailtopo::load_tpdm(tp);
  CHECK(t.threshold_quantile == 0.9);
  CHECK(std::abs(t.matrix.trace() - 12.0) <= 1e-10);

  // raw input is standardized on the fly; grid writes one file per q
  CHECK(call({"tpdm", "--input", sim + "/sub001.csv", "--output", (dir / "g.csv").string(),
              "--tail-quantile-grid", "0.9,0.95"})
            .code == 0);
  CHECK(fs::exists(dir / "g_q0.9.csv"));
  CHECK(fs::exists(dir / "g_q0.95.csv"));

  const auto ct = call({"ctd", "--tpdm", tp, "--oracle-restarts", "5", "--seed", "2"});
  REQUIRE(ct.code == 0);
  const auto j = nlohmann::json::parse(ct.out);
  CHECK(j["lambda1"].size() == 6);
  CHECK(j["oracle_tau"].get<double>() <= j["tau"].get<double>() + 1e-6);
  CHECK(j["timings"].contains("eigen_seconds"));
  CHECK(j.contains("condition_report"));

  const auto mem = (dir / "mem.csv").string();
  const auto cl = call({"cluster", "--manifest", sim + "/manifest.csv", "--fuzziness", "1.1", "--output", mem,
                        "--labels", sim + "/manifest.csv"});
  REQUIRE(cl.code == 0);
  const auto cj = nlohmann::json::parse(cl.out);
  CHECK(cj["accuracy"].get<double>() >= 0.5);
  CHECK(cj["method"] == "ctd");

  const auto ev = call({"evaluate", "--memberships", mem, "--labels", sim + "/manifest.csv"});
  REQUIRE(ev.code == 0);
  CHECK(nlohmann::json::parse(ev.out)["accuracy"] == cj["accuracy"]);

  const auto out = (dir / "run").string();
  CHECK(call({"pipeline", "--manifest", sim + "/manifest.csv", "--out", out, "--fuzziness-grid", "1.1,2"}).code == 0);
  CHECK(fs::exists(dir / "run" / "memberships_m1.1.csv"));
  CHECK(fs::exists(dir / "run" / "memberships_m2.csv"));
  CHECK(fs::exists(dir / "run" / "summary.json"));

  // topologies.csv feeds cluster directly
  CHECK(call({"cluster", "--topologies", out + "/topologies.csv", "--output", (dir / "m2.csv").string()}).code == 0);
}

TEST_CASE("config file with flag override") {
  const auto dir = testutil::tmp_dir("cli_config");
  const auto sim = (dir / "sim").string();
  REQUIRE(call({"simulate", "--n", "6", "--blocks", "200", "--out", sim}).code == 0);
  std::ofstream(dir / "run.toml") << "[pipeline]\nmanifest = \"" << sim << "/manifest.csv\"\nout = \""
                                  << (dir / "a").string() << "\"\nfuzziness-grid = \"1.5\"\ntail-quantile = 0.9\n";
  REQUIRE(call({"--config", (dir / "run.toml").string(), "pipeline"}).code == 0);
  CHECK(fs::exists(dir / "a" / "memberships_m1.5.csv"));
  REQUIRE(call({"--config", (dir / "run.toml").string(), "pipeline", "--fuzziness-grid", "2.2"}).code == 0);
  CHECK(fs::exists(dir / "a" / "memberships_m2.2.csv"));
  std::ifstream in(dir / "a" / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["tail_quantile"] == 0.9);
}

TEST_CASE("exit codes") {
  const auto dir = testutil::tmp_dir("cli_codes");
  CHECK(call({}).code == 2);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"ctd", "--bogus"}).code == 2);
  CHECK(call({"ctd", "--tpdm", (dir / "missing.csv").string()}).code == 4);

  // singular X block -> numerical
  std::ofstream(dir / "sing.csv") << "a,b,c,d\n0,0,0,0\n0,0,0,0\n0,0,1,0\n0,0,0,1\n";
  const auto r = call({"ctd", "--tpdm", (dir / "sing.csv").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("singular") != std::string::npos);

  // validation: non-positive feature
  std::ofstream(dir / "neg.csv") << "# band=none\na,b\n1,2\n-1,3\n";
  CHECK(call({"standardize", "--input", (dir / "neg.csv").string(), "--output", (dir / "o.csv").string()}).code == 2);
  // invalid argument: empty grid
  CHECK(call({"pipeline", "--manifest", "x.csv", "--out", (dir / "o").string(), "--fuzziness-grid", ","}).code == 2);
  // bad margin name
  CHECK(call({"standardize", "--input", "a", "--output", "b", "--margin", "gumbel"}).code == 2);
}

TEST_CASE("features subcommand") {
  const auto dir = testutil::tmp_dir("cli_features");
  std::string body = "a,b\n";
  for (int t = 1; t <= 1024; ++t) {
    const double x = std::cos(2 * std::acos(-1.0) * 40.0 * t / 256.0);
    body += tailtopo::csv::format_double(x) + "," + tailtopo::csv::format_double(0.5 * x + 1e-3 * (t % 7)) + "\n";
  }
  std::ofstream(dir / "sig.csv") << body;
  REQUIRE(call({"features", "--input", (dir / "sig.csv").string(), "--output", (dir / "f.csv").string(), "--band",
                "gamma", "--sampling-rate", "256"})
              .code == 0);
  const auto f = tailtopo::load_feature_panel(dir / "f.csv");
  CHECK(f.values.rows() == 2);
  CHECK(f.block_length == 512);
  CHECK(f.values(0, 0) == doctest::Approx(128.0 / 40.0).epsilon(1e-9));
}

#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "tailtopo/ctd.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/linalg.hpp"
#include "tailtopo/margins.hpp"
#include "tailtopo/pipeline.hpp"
#include "tailtopo/rng.hpp"
#include "tailtopo/simgen.hpp"
#include "tailtopo/tpdm.hpp"

using namespace tailtopo;

namespace {

// per-subject |lambda1|, |lambda2| through the default pipeline path
std::vector<Vector> estimated_topologies(const Simulation& sim) {
  PipelineConfig cfg;
  std::vector<Vector> out;
  for (std::size_t n = 0; n < sim.raw.size(); ++n) {
    SubjectInput in;
    in.subject_id = sim.subject_ids[n];
    in.panel.subject_id = sim.subject_ids[n];
    in.panel.channels = sim.channels;
    in.panel.values = sim.raw[n];
    out.push_back(analyze_subject(cfg, in).topology);
  }
  return out;
}

}  // namespace

TEST_CASE("softplus closed forms and round trip") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (double x = -20.0; x <= 20.0; x += 0.25) CHECK(std::abs(softplus_inv(softplus(x)) - x) <= 1e-10);
  CHECK(softplus(100.0) == 100.0);
  CHECK(softplus_inv(100.0) == 100.0);
  CHECK(std::isfinite(softplus(800.0)));
  CHECK_THROWS_AS(softplus_inv(0.0), InvalidArgument);
  CHECK_THROWS_AS(softplus_inv(-1.0), InvalidArgument);
}

TEST_CASE("transformed-linear identities") {
  for (double y : {1e-6, 0.3, 1.0, 7.5, 45.0, 1e5}) CHECK(tl_scale(1.0, y) == y);
  CHECK(tl_scale(0.0, 3.0) == doctest::Approx(std::log(2.0)));
  // l(0) is the additive identity
  CHECK(tl_add(2.0, std::log(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tl_add(1.5, 2.5) == doctest::Approx(softplus(softplus_inv(1.5) + softplus_inv(2.5))));
}

TEST_CASE("Frechet inversion") {
  CHECK(frechet2_from_uniform(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(frechet2_from_uniform(0.0), InvalidArgument);
}

TEST_CASE("default deltas") {
  const auto [d1, d2] = default_cluster_deltas(2, 2);
  CHECK(d1(0, 0) == 1.0);
  CHECK(d1(0, 1) == 0.0);
  CHECK(d1(0, 2) == 0.8);
  CHECK(d1(0, 3) == 0.0);
  for (const auto* d : {&d1, &d2}) {
    CHECK(linalg::min_eigenvalue(*d * d->transpose()) > 0.0);
  }
  for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 2}, {3, 3}, {6, 6}, {4, 3}}) {
    SimulationSpec s;
    s.p = p;
    s.q = q;
    s.subjects = 2;
    s.blocks = 50;
    const auto sim = simulate_panel(s);
    const auto& t = sim.truth;
    CHECK((t.topology_tpdm[0] - t.topology_tpdm[1]).norm() > 0.1);
    CHECK(t.tau_tpdm[0] > 0.05);
    CHECK(t.tau_tpdm[1] > 0.05);
    CHECK(t.topology_tpdm[0].head(p).norm() == doctest::Approx(1.0));
    CHECK(t.topology_tpdm[0].tail(q).norm() == doctest::Approx(1.0));
    CHECK(!t.tpdm[0].isApprox(t.precision[0]));
  }
  CHECK_THROWS_AS(default_cluster_deltas(1, 3), InvalidArgument);
}

TEST_CASE("identity delta yields independent Frechet channels") {
  SimulationSpec s;
  s.p = 2;
  s.q = 2;
  s.delta1 = Matrix::Identity(4, 4);
  s.delta2 = Matrix::Identity(4, 4);
  s.subjects = 2;
  s.blocks = 20000;
  s.seed = 3;
  const auto sim = simulate_panel(s);
  // Z_j = V_j exactly: recompute the uniforms' Frechet draws from the same stream
  Engine eng(derive_seed(3, Stage::simulate, 0));
  for (int b = 0; b < 5; ++b) {
    for (int k = 0; k < 4; ++k) CHECK(sim.raw[0](b, k) == frechet2_from_uniform(uniform_open(eng)));
  }
  const auto t = estimate_tpdm(sim.standardized[0], 0.95);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) CHECK(std::abs(t.matrix(i, j)) <= 0.1);
}

TEST_CASE("fuzzy count and determinism") {
  SimulationSpec s;
  s.subjects = 20;
  s.blocks = 60;
  s.fuzzy_fraction = 0.1;
  s.seed = 5;
  const auto a = simulate_panel(s);
  int fuzzy = 0;
  for (bool f : a.truth.fuzzy) fuzzy += f;
  CHECK(fuzzy == 2);
  const auto b = simulate_panel(s);
  for (std::size_t n = 0; n < a.raw.size(); ++n) {
    CHECK((a.raw[n].array() == b.raw[n].array()).all());
    CHECK((a.raw[n].array() > 0.0).all());
  }
  CHECK(a.truth.fuzzy == b.truth.fuzzy);
  int ones = 0;
  for (int l : a.truth.labels) ones += l == 1;
  CHECK(ones == 10);
  s.seed = 6;
  const auto c = simulate_panel(s);
  CHECK_FALSE((a.raw[0].array() == c.raw[0].array()).all());
}

TEST_CASE("standardized output has heavy symmetric margins") {
  SimulationSpec s;
  s.subjects = 2;
  s.blocks = 10000;
  const auto sim = simulate_panel(s);
  const MarginSpec spec{MarginFamily::symmetric_pareto2, 0.0};
  const double z = spec.quantile(0.99);
  for (Eigen::Index j = 0; j < sim.standardized[0].cols(); ++j) {
    const double exceed = static_cast<double>((sim.standardized[0].col(j).array().abs() > z).count()) / 10000.0;
    CHECK(exceed * z * z == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("estimated TPDM approaches delta delta'") {
  SimulationSpec s;
  s.p = 2;
  s.q = 2;
  s.subjects = 2;
  s.blocks = 200000;
  s.seed = 8;
  const auto sim = simulate_panel(s);
  // unit margins normalize delta delta' to unit diagonal
  const Matrix& g = sim.truth.tpdm[0];
  const Vector inv = g.diagonal().cwiseSqrt().cwiseInverse();
  const Matrix truth = inv.asDiagonal() * g * inv.asDiagonal();
  const Matrix z = rank_standardize(sim.raw[0], MarginSpec{});
  double prev = INFINITY;
  for (double q : {0.95, 0.99, 0.999}) {
    const double err = (estimate_tpdm(z, q).matrix - truth).cwiseAbs().maxCoeff();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 0.1);
}

TEST_CASE("spec validation") {
  SimulationSpec s;
  s.subjects = 4;
  s.blocks = 50;
  s.delta1 = Matrix::Zero(12, 12);
  CHECK_THROWS_AS(simulate_panel(s), InvalidArgument);
  s.delta1 = Matrix::Identity(5, 5);
  CHECK_THROWS_AS(simulate_panel(s), InvalidArgument);
  s.delta1.resize(0, 0);
  s.fuzzy_fraction = 1.5;
  CHECK_THROWS_AS(simulate_panel(s), InvalidArgument);
  s.fuzzy_fraction = 0.0;
  s.cluster_assignment = {1, 2, 3, 1};
  CHECK_THROWS_AS(simulate_panel(s), InvalidArgument);
}

TEST_CASE("written simulation reloads") {
  const auto dir = testutil::tmp_dir("simgen_write");
  SimulationSpec s;
  s.subjects = 4;
  s.blocks = 80;
  s.convention = TruthConvention::precision;
  const auto sim = simulate_panel(s);
  write_simulation(dir, s, sim);
  const auto m = load_manifest(dir / "manifest.csv");
  REQUIRE(m.size() == 4);
  CHECK(m[1].label == 2);
  const auto p = load_feature_panel(m[2].path);
  CHECK((p.values.array() == sim.raw[2].array()).all());
  std::ifstream in(dir / "truth.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["truth_convention"] == "precision");
  CHECK(j["labels"].size() == 4);
  CHECK(j["topology_tpdm"]["cluster1"].size() == 12);
  CHECK(j["topology"]["cluster2"][0].get<double>() == sim.truth.topology_precision[1](0));
}

// Frozen threshold: 90th percentile of the error over three calibration seeds was 1.45.
// The frechet2 bias puts a floor of roughly 0.3 on every uncoupled channel, hence the size.
TEST_CASE("per-subject topology recovers its cluster") {
  constexpr double kRecoveryThreshold = 1.5;
  int within = 0, nearer_own = 0, total = 0;
  for (std::uint64_t seed : {21u, 22u}) {
    SimulationSpec s;
    s.seed = seed;
    const auto sim = simulate_panel(s);
    const auto topo = estimated_topologies(sim);
    for (std::size_t n = 0; n < topo.size(); ++n) {
      const int d = sim.truth.labels[n];
      const double own = (topo[n] - sim.truth.topology(d)).norm();
      const double other = (topo[n] - sim.truth.topology(3 - d)).norm();
      within += own <= kRecoveryThreshold;
      nearer_own += own < other;
      ++total;
    }
  }
  CHECK(within >= 0.9 * total);
  CHECK(nearer_own >= 0.9 * total);
}

// With 100 exceedances per subject the mixture's top canonical pair is barely separated
// (0.20 vs 0.14), so fuzzy estimates scatter as widely as the ordinary ones.
TEST_CASE("fuzzy subjects sit nearest the cluster midpoint" * doctest::may_fail()) {
  int runs_ok = 0;
  const int runs = 5;
  for (int r = 0; r < runs; ++r) {
    SimulationSpec s;
    s.seed = 40 + static_cast<std::uint64_t>(r);
    s.fuzzy_fraction = 0.1;
    const auto sim = simulate_panel(s);
    const auto topo = estimated_topologies(sim);
    const Vector mid = 0.5 * (sim.truth.topology(1) + sim.truth.topology(2));
    double worst_fuzzy = 0.0, best_plain = INFINITY;
    for (std::size_t n = 0; n < topo.size(); ++n) {
      const double dist = (topo[n] - mid).norm();
      if (sim.truth.fuzzy[n]) worst_fuzzy = std::max(worst_fuzzy, dist);
      else best_plain = std::min(best_plain, dist);
    }
    runs_ok += worst_fuzzy < best_plain;
  }
  MESSAGE("fuzzy-nearest runs: " << runs_ok << "/" << runs);
  CHECK(runs_ok >= 0.8 * runs);
}

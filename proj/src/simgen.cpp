#include "tailtopo/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tailtopo/csv.hpp"
#include "tailtopo/ctd.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/linalg.hpp"
#include "tailtopo/margins.hpp"
#include "tailtopo/parallel.hpp"
#include "tailtopo/rng.hpp"

namespace tailtopo {

double softplus(double x) {
  if (x > 30.0) return x + std::exp(-x);
  return std::log1p(std::exp(x));
}

double softplus_inv(double y) {
  if (!(y > 0.0)) throw InvalidArgument("inverse softplus needs y > 0");
  if (y > 30.0) return y - std::exp(-y);
  return std::log(std::expm1(y));
}

double tl_scale(double a, double y) {
  if (a == 1.0) return y;
  return softplus(a * softplus_inv(y));
}

double tl_add(double y, double z) { return softplus(softplus_inv(y) + softplus_inv(z)); }

double frechet2_from_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("uniform level must lie in (0,1)");
  return 1.0 / std::sqrt(-std::log(u));
}

TruthConvention parse_truth_convention(const std::string& text) {
  if (text == "tpdm") return TruthConvention::tpdm;
  if (text == "precision") return TruthConvention::precision;
  throw InvalidArgument("truth convention must be tpdm or precision");
}

std::string truth_convention_name(TruthConvention c) {
  return c == TruthConvention::tpdm ? "tpdm" : "precision";
}

std::pair<Matrix, Matrix> default_cluster_deltas(int p, int q, std::uint64_t /*seed*/) {
  if (p < 2 || q < 2) throw InvalidArgument("default deltas need P, Q >= 2");
  const int d = p + q;
  Matrix d1 = Matrix::Identity(d, d);
  Matrix d2 = Matrix::Identity(d, d);
  double w = kDefaultCoupling;
  for (int i = 0; i < std::min(p, q); ++i) {
    d1(i, p + i) = w;
    d2(i, p + q - 1 - i) = w;
    w *= kCouplingDecay;
  }
  return {d1, d2};
}

namespace {

void check_delta(const Matrix& delta, int d, const char* name) {
  if (delta.rows() != d || delta.cols() != d) {
    throw InvalidArgument(std::string(name) + " must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!delta.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
  const Matrix g = delta * delta.transpose();
  const double lo = linalg::min_eigenvalue(g);
  if (!(lo > 1e-12 * g.trace())) {
    throw InvalidArgument(std::string(name) + " * " + name + "' is not positive definite (min eigenvalue " +
                          csv::format_double(lo) + ")");
  }
}

std::string subject_name(int n, int total) {
  const auto width = std::max<std::size_t>(3, std::to_string(total).size());
  auto digits = std::to_string(n + 1);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "sub" + digits;
}

// |lambda1|, |lambda2| of the first-P / last-Q split.
std::pair<Vector, double> topology_of(const Matrix& gamma, int p, int q) {
  ResolvedPartition part;
  for (int i = 0; i < p; ++i) part.x_index.push_back(i);
  for (int i = 0; i < q; ++i) part.y_index.push_back(p + i);
  const auto s = solve_ctd(gamma, part);
  Vector v(p + q);
  v << s.lambda1.cwiseAbs(), s.lambda2.cwiseAbs();
  return {v, s.tau};
}

nlohmann::json to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

SimulationSpec normalized_spec(SimulationSpec spec) {
  if (spec.p < 2 || spec.q < 2) throw InvalidArgument("P and Q must be at least 2");
  if (spec.subjects < 2) throw InvalidArgument("need at least 2 subjects");
  if (spec.blocks < 50) throw InvalidArgument("need at least 50 blocks");
  if (!(spec.fuzzy_fraction >= 0.0 && spec.fuzzy_fraction <= 1.0)) {
    throw InvalidArgument("fuzzy fraction must lie in [0, 1]");
  }
  const int d = spec.p + spec.q;
  if (spec.delta1.size() == 0 || spec.delta2.size() == 0) {
    auto [d1, d2] = default_cluster_deltas(spec.p, spec.q, spec.seed);
    if (spec.delta1.size() == 0) spec.delta1 = d1;
    if (spec.delta2.size() == 0) spec.delta2 = d2;
  }
  check_delta(spec.delta1, d, "delta1");
  check_delta(spec.delta2, d, "delta2");
  if (spec.cluster_assignment.empty()) {
    for (int n = 0; n < spec.subjects; ++n) spec.cluster_assignment.push_back(1 + n % 2);
  }
  if (static_cast<int>(spec.cluster_assignment.size()) != spec.subjects) {
    throw InvalidArgument("cluster assignment length must equal the subject count");
  }
  for (int l : spec.cluster_assignment) {
    if (l != 1 && l != 2) throw InvalidArgument("cluster labels must be 1 or 2");
  }
  return spec;
}

Simulation simulate_panel(const SimulationSpec& raw_spec) {
  const auto spec = normalized_spec(raw_spec);
  const int d = spec.p + spec.q;
  const int n_subj = spec.subjects;
  const auto n_blocks = static_cast<Eigen::Index>(spec.blocks);

  Simulation sim;
  for (int i = 0; i < spec.p; ++i) sim.channels.push_back("X" + std::to_string(i + 1));
  for (int i = 0; i < spec.q; ++i) sim.channels.push_back("Y" + std::to_string(i + 1));
  for (int n = 0; n < n_subj; ++n) sim.subject_ids.push_back(subject_name(n, n_subj));

  auto& truth = sim.truth;
  truth.convention = spec.convention;
  truth.labels = spec.cluster_assignment;
  truth.fuzzy.assign(static_cast<std::size_t>(n_subj), false);
  {
    const auto n_fuzzy = static_cast<int>(std::floor(spec.fuzzy_fraction * n_subj + 1e-9));
    std::vector<int> order(static_cast<std::size_t>(n_subj));
    std::iota(order.begin(), order.end(), 0);
    Engine eng(derive_seed(spec.seed, Stage::fuzzy_pick));
    for (int i = 0; i < n_fuzzy; ++i) {
      const auto span = static_cast<std::uint64_t>(n_subj - i);
      const auto j = i + static_cast<int>(eng() % span);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      truth.fuzzy[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    }
  }
  const std::array<const Matrix*, 2> deltas{&spec.delta1, &spec.delta2};
  for (std::size_t c = 0; c < 2; ++c) {
    const Matrix g = *deltas[c] * deltas[c]->transpose();
    truth.tpdm[c] = 0.5 * (g + g.transpose());
    const Matrix h = truth.tpdm[c].inverse();
    truth.precision[c] = 0.5 * (h + h.transpose());
    std::tie(truth.topology_tpdm[c], truth.tau_tpdm[c]) = topology_of(truth.tpdm[c], spec.p, spec.q);
    std::tie(truth.topology_precision[c], truth.tau_precision[c]) =
        topology_of(truth.precision[c], spec.p, spec.q);
  }

  sim.raw.resize(static_cast<std::size_t>(n_subj));
  sim.standardized.resize(static_cast<std::size_t>(n_subj));
  const MarginSpec pareto{MarginFamily::symmetric_pareto2, 0.0};
  parallel_for(static_cast<std::size_t>(n_subj), [&](std::size_t n) {
    Engine eng(derive_seed(spec.seed, Stage::simulate, n));
    const bool fuzzy = truth.fuzzy[n];
    const int label = truth.labels[n];
    Matrix z(n_blocks, d);
    Vector link(d);  // l^{-1}(V_k)
    Vector v(d);
    for (Eigen::Index b = 0; b < n_blocks; ++b) {
      const int which = fuzzy ? (coin_flip(eng) ? 1 : 0) : label - 1;
      const Matrix& delta = *deltas[static_cast<std::size_t>(which)];
      for (int k = 0; k < d; ++k) {
        v(k) = frechet2_from_uniform(uniform_open(eng));
        link(k) = softplus_inv(v(k));
      }
      for (int j = 0; j < d; ++j) {
        // (+)_k delta_jk o V_k = l(sum_k delta_jk l^{-1}(V_k)); zero weights contribute the
        // additive identity l(0).
        double s = 0.0;
        int terms = 0;
        int last = -1;
        for (int k = 0; k < d; ++k) {
          const double a = delta(j, k);
          if (a == 0.0) continue;
          s += a * link(k);
          ++terms;
          last = k;
        }
        if (terms == 1 && delta(j, last) == 1.0) {
          z(b, j) = v(last);
        } else {
          z(b, j) = softplus(s);
        }
      }
    }
    sim.standardized[n] = rank_standardize(z, pareto, sim.channels);
    sim.raw[n] = std::move(z);
  });
  return sim;
}

void write_simulation(const std::filesystem::path& dir, const SimulationSpec& raw_spec,
                      const Simulation& sim) {
  const auto spec = normalized_spec(raw_spec);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<ManifestEntry> manifest;
  for (std::size_t n = 0; n < sim.raw.size(); ++n) {
    BandPeriodogramPanel panel;
    panel.subject_id = sim.subject_ids[n];
    panel.band = BandSpec::standard(BandName::none);
    panel.channels = sim.channels;
    panel.values = sim.raw[n];
    const auto file = dir / (sim.subject_ids[n] + ".csv");
    write_feature_panel(file, panel,
                        {"simulated=transformed-linear", "fuzzy=" + std::string(sim.truth.fuzzy[n] ? "1" : "0")});
    // relative to the manifest so the directory can move
    manifest.push_back({sim.subject_ids[n], file.filename(), sim.truth.labels[n]});
  }
  write_manifest(dir / "manifest.csv", manifest);

  const auto& t = sim.truth;
  nlohmann::json j;
  j["subjects"] = sim.subject_ids;
  j["channels"] = sim.channels;
  j["labels"] = t.labels;
  j["fuzzy"] = t.fuzzy;
  j["spec"] = {{"subjects", spec.subjects},   {"blocks", spec.blocks},
               {"fuzzy_fraction", spec.fuzzy_fraction}, {"p", spec.p},
               {"q", spec.q},                 {"seed", spec.seed}};
  j["delta1"] = to_json(spec.delta1);
  j["delta2"] = to_json(spec.delta2);
  j["truth_convention"] = truth_convention_name(t.convention);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto key = "cluster" + std::to_string(c + 1);
    j["tpdm"][key] = to_json(t.tpdm[c]);
    j["precision"][key] = to_json(t.precision[c]);
    j["topology_tpdm"][key] = to_json(t.topology_tpdm[c]);
    j["topology_precision"][key] = to_json(t.topology_precision[c]);
    j["tau_tpdm"][key] = t.tau_tpdm[c];
    j["tau_precision"][key] = t.tau_precision[c];
    j["topology"][key] = to_json(t.topology(static_cast<int>(c) + 1));
  }
  csv::write_text(dir / "truth.json", j.dump(2) + "\n");
}

}  // namespace tailtopo

#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "tailtopo/cluster.hpp"
#include "tailtopo/ctd.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/margins.hpp"
#include "tailtopo/pipeline.hpp"
#include "tailtopo/simgen.hpp"
#include "tailtopo/spectral.hpp"
#include "tailtopo/tpdm.hpp"

namespace py = pybind11;
using namespace tailtopo;

namespace {

ResolvedPartition split_at(Eigen::Index d, Eigen::Index p) {
  if (p < 1 || p >= d) throw InvalidArgument("p must lie in [1, D)");
  ResolvedPartition r;
  for (Eigen::Index i = 0; i < d; ++i) (i < p ? r.x_index : r.y_index).push_back(i);
  return r;
}

py::dict solution_dict(const CtdSolution& s) {
  py::dict d;
  d["tau"] = s.tau;
  d["gamma_star"] = s.gamma_star;
  d["beta_star"] = s.beta_star;
  d["lambda1"] = s.lambda1;
  d["lambda2"] = s.lambda2;
  d["spectrum"] = s.spectrum;
  py::dict c;
  c["min_eig_xx"] = s.condition.min_eig_xx;
  c["min_eig_yy"] = s.condition.min_eig_yy;
  c["ridge_xx"] = s.condition.ridge_xx;
  c["ridge_yy"] = s.condition.ridge_yy;
  c["top_gap"] = s.condition.top_gap;
  c["degenerate"] = s.condition.degenerate;
  d["condition"] = c;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tailtopo, m) {
  m.doc() = "tailtopo core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  (void)invalid;
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "local_dft",
      [](const std::vector<double>& block) { return local_dft(block); }, py::arg("block"),
      "Local DFT with 1/sqrt(A) normalization, bins 0..A-1.");

  m.def(
      "band_periodogram",
      [](const Matrix& samples, double sampling_rate_hz, const std::string& band, double block_seconds,
         bool detrend) {
        SignalPanel s;
        s.subject_id = "python";
        s.samples = samples;
        s.sampling_rate_hz = sampling_rate_hz;
        for (Eigen::Index j = 0; j < samples.cols(); ++j) s.channels.push_back("c" + std::to_string(j + 1));
        const auto a = block_length_for(block_seconds, sampling_rate_hz);
        return band_periodogram(s, BandSpec::parse(band), a, BandPeriodogramOptions{detrend}).values;
      },
      py::arg("samples"), py::arg("sampling_rate_hz"), py::arg("band") = "gamma", py::arg("block_seconds") = 2.0,
      py::arg("detrend") = false, "T x D signal -> B x D band periodogram.");

  m.def(
      "rank_standardize",
      [](const Matrix& values, const std::string& margin, double rank_offset) {
        return rank_standardize(values, MarginSpec{MarginSpec::parse_family(margin), rank_offset}, {});
      },
      py::arg("values"), py::arg("margin") = "frechet2", py::arg("rank_offset") = 0.0);

  m.def(
      "estimate_tpdm",
      [](const Matrix& panel, double q) {
        const auto t = estimate_tpdm(panel, q);
        py::dict d;
        d["matrix"] = t.matrix;
        d["exceedances"] = t.exceedance_count;
        d["radius"] = t.radius;
        d["warnings"] = t.warnings;
        return d;
      },
      py::arg("panel"), py::arg("q") = 0.95);

  m.def(
      "solve_ctd",
      [](const Matrix& gamma, Eigen::Index p) { return solution_dict(solve_ctd(gamma, split_at(gamma.rows(), p))); },
      py::arg("gamma"), py::arg("p"), "CTD of a TPDM whose first p channels form X.");

  m.def(
      "numeric_ctd_oracle",
      [](const Matrix& gamma, Eigen::Index p, int restarts, std::uint64_t seed) {
        const auto o = numeric_ctd_oracle(gamma, split_at(gamma.rows(), p), restarts, seed);
        py::dict d;
        d["tau"] = o.tau;
        d["gamma"] = o.gamma;
        d["beta"] = o.beta;
        d["seconds"] = o.seconds;
        return d;
      },
      py::arg("gamma"), py::arg("p"), py::arg("restarts") = 200, py::arg("seed") = 0);

  m.def(
      "fuzzy_cmeans",
      [](const Matrix& features, int clusters, double fuzziness, std::uint64_t seed, int restarts, double cutoff) {
        FeatureStack st;
        st.features = features;
        for (Eigen::Index i = 0; i < features.rows(); ++i) st.subjects.push_back(std::to_string(i));
        FcmOptions o;
        o.clusters = clusters;
        o.fuzziness = fuzziness;
        o.seed = seed;
        o.restarts = restarts;
        o.cutoff = cutoff;
        const auto f = fuzzy_cmeans(st, o);
        py::dict d;
        d["u"] = f.u;
        d["centers"] = f.centers;
        d["objective_trace"] = f.objective_trace;
        d["hard_labels"] = f.hard_labels;
        d["fuzzy_flags"] = f.fuzzy_flags;
        d["converged"] = f.converged;
        return d;
      },
      py::arg("features"), py::arg("clusters") = 2, py::arg("fuzziness") = 2.0, py::arg("seed") = 0,
      py::arg("restarts") = 10, py::arg("cutoff") = 0.7);

  m.def("accuracy", py::overload_cast<const std::vector<int>&, const std::vector<int>&>(&accuracy),
        py::arg("predicted"), py::arg("truth"), "Two-cluster accuracy, invariant to label swap.");

  m.def(
      "simulate",
      [](int subjects, int blocks, double fuzzy_frac, int p, int q, std::uint64_t seed) {
        SimulationSpec s;
        s.subjects = subjects;
        s.blocks = blocks;
        s.fuzzy_fraction = fuzzy_frac;
        s.p = p;
        s.q = q;
        s.seed = seed;
        const auto sim = simulate_panel(s);
        py::dict d;
        d["subjects"] = sim.subject_ids;
        d["channels"] = sim.channels;
        d["raw"] = sim.raw;
        d["standardized"] = sim.standardized;
        d["labels"] = sim.truth.labels;
        d["fuzzy"] = sim.truth.fuzzy;
        d["topology"] = std::vector<Vector>{sim.truth.topology(1), sim.truth.topology(2)};
        return d;
      },
      py::arg("subjects") = 40, py::arg("blocks") = 2000, py::arg("fuzzy_frac") = 0.0, py::arg("p") = 6,
      py::arg("q") = 6, py::arg("seed") = 0);

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out_dir, const std::string& method,
         std::uint64_t seed) {
        PipelineConfig c;
        c.method = parse_method(method);
        c.seed = seed;
        const auto r = run_pipeline(c, manifest);
        run_report_export(r, out_dir);
        py::dict acc;
        for (const auto& res : r.results) acc[py::float_(res.m)] = res.accuracy ? py::cast(*res.accuracy) : py::none();
        return acc;
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("method") = "ctd", py::arg("seed") = 0,
      "Runs the default pipeline and exports it; returns accuracy per m.");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}

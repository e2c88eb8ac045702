#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tailtopo/cluster.hpp"
#include "tailtopo/csv.hpp"
#include "tailtopo/ctd.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/margins.hpp"
#include "tailtopo/pipeline.hpp"
#include "tailtopo/simgen.hpp"
#include "tailtopo/spectral.hpp"
#include "tailtopo/tpdm.hpp"

namespace tailtopo::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<double> parse_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& f : csv::split_line(text)) {
    const auto t = csv::trim(f);
    if (t.empty()) continue;
    out.push_back(csv::parse_double(t, 0));
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + " is empty");
  return out;
}

Matrix load_square(const fs::path& path) {
  const auto t = csv::read_file(path);
  const auto d = static_cast<Eigen::Index>(t.header.size());
  if (static_cast<Eigen::Index>(t.rows.size()) != d) {
    throw ValidationError(path.string() + ": expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
  }
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = csv::parse_double(row.fields[static_cast<std::size_t>(j)], row.line);
  }
  return m;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    csv::write_text(path, text);
  }
}

std::string with_suffix(const fs::path& base, const std::string& suffix) {
  auto stem = base.stem().string();
  auto ext = base.extension().string();
  return (base.parent_path() / (stem + suffix + ext)).string();
}

json condition_json(const ConditionReport& c) {
  return json{{"min_eig_xx", c.min_eig_xx},
              {"min_eig_yy", c.min_eig_yy},
              {"ridge_xx", c.ridge_xx},
              {"ridge_yy", c.ridge_yy},
              {"top_gap", std::isfinite(c.top_gap) ? json(c.top_gap) : json(nullptr)},
              {"degenerate", c.degenerate}};
}

// Labels keyed by subject id from a manifest.
std::map<std::string, int> manifest_labels(const fs::path& path) {
  std::map<std::string, int> out;
  for (const auto& e : load_manifest(path)) {
    if (!e.label) throw ValidationError("manifest " + path.string() + ": subject '" + e.subject_id + "' has no label");
    out[e.subject_id] = *e.label;
  }
  return out;
}

std::vector<int> labels_for(const std::vector<std::string>& subjects, const std::map<std::string, int>& labels) {
  std::vector<int> truth;
  for (const auto& s : subjects) {
    auto it = labels.find(s);
    if (it == labels.end()) throw ValidationError("no label for subject '" + s + "'");
    truth.push_back(it->second);
  }
  return truth;
}

json confusion_json(const ConfusionMatrix& c) {
  return json{{c.m[0][0], c.m[0][1]}, {c.m[1][0], c.m[1][1]}};
}

struct PipelineFlags {
  std::string band = "gamma";
  std::string margin = "frechet2";
  std::string grid;
  std::string partition;
  std::string method = "ctd";
  std::string input_kind = "auto";
};

void add_config_flags(CLI::App* sub, PipelineConfig& c, PipelineFlags& f) {
  sub->add_option("--band", f.band, "delta|theta|alpha|beta|gamma or lo-hi in Hz")->capture_default_str();
  sub->add_option("--block-seconds", c.block_seconds)->capture_default_str();
  sub->add_option("--sampling-rate", c.sampling_rate_hz, "Hz, for signal inputs")->capture_default_str();
  sub->add_flag("--detrend", c.detrend, "subtract the block mean before the DFT");
  sub->add_option("--margin", f.margin, "frechet2|symmetric-pareto2")->capture_default_str();
  sub->add_option("--rank-offset", c.margin.rank_offset)->capture_default_str();
  sub->add_option("--tail-quantile", c.tail_quantile)->capture_default_str();
  sub->add_option("--clusters", c.clusters)->capture_default_str();
  sub->add_option("--cutoff", c.cutoff)->capture_default_str();
  sub->add_option("--seed", c.seed)->capture_default_str();
  sub->add_option("--restarts", c.restarts)->capture_default_str();
  sub->add_option("--max-iter", c.max_iter)->capture_default_str();
  sub->add_option("--tol", c.tol)->capture_default_str();
  sub->add_option("--partition", f.partition, "X channels:Y channels, e.g. F3,F7:P3,P4");
  sub->add_option("--method", f.method, "ctd|cca")->capture_default_str();
  sub->add_option("--input-kind", f.input_kind, "auto|signal|feature")->capture_default_str();
}

void finish_config(PipelineConfig& c, const PipelineFlags& f) {
  c.band = BandSpec::parse(f.band);
  c.margin.family = MarginSpec::parse_family(f.margin);
  if (!f.grid.empty()) c.fuzziness_grid = parse_grid(f.grid, "fuzziness grid");
  if (!f.partition.empty()) c.partition = ChannelPartition::parse(f.partition);
  c.method = parse_method(f.method);
  c.input = parse_input_kind(f.input_kind);
  c.validate();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Canonical tail dependence toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags take precedence");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate transformed-linear subject panels");
  SimulationSpec sspec;
  std::string delta1_path, delta2_path, sim_out, truth_conv = "tpdm";
  sim->add_option("--n", sspec.subjects, "number of subjects")->capture_default_str();
  sim->add_option("--blocks", sspec.blocks)->capture_default_str();
  sim->add_option("--fuzzy-frac", sspec.fuzzy_fraction)->capture_default_str();
  sim->add_option("--p", sspec.p)->capture_default_str();
  sim->add_option("--q", sspec.q)->capture_default_str();
  sim->add_option("--seed", sspec.seed)->capture_default_str();
  sim->add_option("--delta1", delta1_path, "D x D CSV with a header row");
  sim->add_option("--delta2", delta2_path, "D x D CSV with a header row");
  sim->add_option("--truth-convention", truth_conv, "tpdm|precision")->capture_default_str();
  sim->add_option("--out", sim_out, "output directory")->required();

  // features
  auto* feat = app.add_subcommand("features", "Band periodogram features from a signal CSV");
  std::string feat_in, feat_out, feat_band = "gamma", feat_id;
  double feat_seconds = 2.0, feat_sr = 256.0;
  bool feat_detrend = false;
  feat->add_option("--input", feat_in)->required();
  feat->add_option("--output", feat_out)->required();
  feat->add_option("--band", feat_band)->capture_default_str();
  feat->add_option("--block-seconds", feat_seconds)->capture_default_str();
  feat->add_option("--sampling-rate", feat_sr)->capture_default_str();
  feat->add_option("--subject-id", feat_id);
  feat->add_flag("--detrend", feat_detrend);

  // standardize
  auto* stdz = app.add_subcommand("standardize", "Rank-transform a feature CSV to heavy-tailed margins");
  std::string std_in, std_out, std_margin = "frechet2";
  double std_offset = 0.0;
  stdz->add_option("--input", std_in)->required();
  stdz->add_option("--output", std_out)->required();
  stdz->add_option("--margin", std_margin, "frechet2|symmetric-pareto2")->capture_default_str();
  stdz->add_option("--rank-offset", std_offset)->capture_default_str();

  // tpdm
  auto* tp = app.add_subcommand("tpdm", "Estimate the tail pairwise dependence matrix");
  std::string tp_in, tp_out, tp_partition, tp_grid, tp_margin = "frechet2";
  double tp_q = 0.95;
  tp->add_option("--input", tp_in, "feature CSV; standardized first unless it carries a margin= comment")->required();
  tp->add_option("--output", tp_out)->required();
  tp->add_option("--tail-quantile", tp_q)->capture_default_str();
  tp->add_option("--tail-quantile-grid", tp_grid, "comma-separated q values; writes one file per q");
  tp->add_option("--partition", tp_partition);
  tp->add_option("--margin", tp_margin)->capture_default_str();

  // ctd
  auto* ct = app.add_subcommand("ctd", "Canonical tail dependence of a TPDM");
  std::string ct_in, ct_out, ct_partition;
  int ct_restarts = 0;
  std::uint64_t ct_seed = 0;
  ct->add_option("--tpdm", ct_in)->required();
  ct->add_option("--partition", ct_partition);
  ct->add_option("--oracle-restarts", ct_restarts, "0 disables the numeric oracle")->capture_default_str();
  ct->add_option("--seed", ct_seed)->capture_default_str();
  ct->add_option("--output", ct_out, "JSON path, stdout when omitted");

  // cluster
  auto* cl = app.add_subcommand("cluster", "Fuzzy c-means on subject tail topologies");
  PipelineConfig cl_cfg;
  PipelineFlags cl_flags;
  double cl_m = 2.0;
  std::string cl_manifest, cl_topologies, cl_labels, cl_out, cl_summary;
  add_config_flags(cl, cl_cfg, cl_flags);
  cl->add_option("--fuzziness", cl_m)->capture_default_str();
  auto* cl_man_opt = cl->add_option("--manifest", cl_manifest, "feature/signal manifest");
  cl->add_option("--topologies", cl_topologies, "precomputed topologies.csv")->excludes(cl_man_opt);
  cl->add_option("--labels", cl_labels, "manifest with labels for accuracy");
  cl->add_option("--output", cl_out, "membership CSV")->required();
  cl->add_option("--summary", cl_summary, "JSON summary path, stdout when omitted");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Features to memberships for every m of the grid");
  PipelineConfig pl_cfg;
  PipelineFlags pl_flags;
  std::string pl_manifest, pl_out;
  add_config_flags(pl, pl_cfg, pl_flags);
  pl->add_option("--fuzziness-grid", pl_flags.grid, "comma-separated m values");
  pl->add_option("--manifest", pl_manifest)->required();
  pl->add_option("--out", pl_out, "output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Accuracy of a membership CSV against labels");
  std::string ev_mem, ev_labels, ev_out;
  ev->add_option("--memberships", ev_mem)->required();
  ev->add_option("--labels", ev_labels, "manifest with labels")->required();
  ev->add_option("--output", ev_out, "JSON path, stdout when omitted");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::validation;
  }

  try {
    if (*sim) {
      if (!delta1_path.empty()) sspec.delta1 = load_square(delta1_path);
      if (!delta2_path.empty()) sspec.delta2 = load_square(delta2_path);
      sspec.convention = parse_truth_convention(truth_conv);
      const auto result = simulate_panel(sspec);
      write_simulation(sim_out, sspec, result);
    } else if (*feat) {
      const auto sig = load_signal_panel(feat_in, feat_sr,
                                         feat_id.empty() ? std::nullopt : std::optional<std::string>(feat_id));
      const auto a = block_length_for(feat_seconds, feat_sr);
      const auto panel = band_periodogram(sig, BandSpec::parse(feat_band), a, BandPeriodogramOptions{feat_detrend});
      write_feature_panel(feat_out, panel);
    } else if (*stdz) {
      const MarginSpec spec{MarginSpec::parse_family(std_margin), std_offset};
      auto panel = load_feature_panel(std_in);
      panel.values = rank_standardize(panel, spec);
      write_feature_panel(std_out, panel,
                          {"margin=" + MarginSpec::family_name(spec.family),
                           "rank_offset=" + csv::format_double(std_offset)});
    } else if (*tp) {
      const auto table = csv::read_file(tp_in);
      const bool standardized = !csv::comment_value(table, "margin").empty();
      FeatureLoadOptions lo;
      lo.require_positive = !standardized;
      auto panel = load_feature_panel(tp_in, lo);
      Matrix z = standardized ? panel.values : rank_standardize(panel, MarginSpec{MarginSpec::parse_family(tp_margin), 0.0});
      TpdmOptions opts{panel.channels, std::nullopt};
      if (!tp_partition.empty()) opts.partition = ChannelPartition::parse(tp_partition);
      if (tp_grid.empty()) {
        const auto t = estimate_tpdm(z, tp_q, opts);
        for (const auto& w : t.warnings) err << "warning: " << w << "\n";
        write_tpdm(tp_out, t);
      } else {
        for (double q : parse_grid(tp_grid, "tail-quantile grid")) {
          const auto t = estimate_tpdm(z, q, opts);
          for (const auto& w : t.warnings) err << "warning: q=" << q << ": " << w << "\n";
          write_tpdm(with_suffix(tp_out, "_q" + csv::format_double(q)), t);
        }
      }
    } else if (*ct) {
      auto t = load_tpdm(ct_in);
      if (!ct_partition.empty()) t.partition = ChannelPartition::parse(ct_partition);
      const auto t0 = std::chrono::steady_clock::now();
      const auto s = solve_ctd(t);
      const double eigen_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      json j;
      j["partition"] = t.partition.to_string();
      j["tau"] = s.tau;
      j["gamma_star"] = vec_json(s.gamma_star);
      j["beta_star"] = vec_json(s.beta_star);
      j["lambda1"] = vec_json(s.lambda1);
      j["lambda2"] = vec_json(s.lambda2);
      j["spectrum"] = s.spectrum;
      j["condition_report"] = condition_json(s.condition);
      json timings{{"eigen_seconds", eigen_s}};
      if (ct_restarts > 0) {
        const auto o = numeric_ctd_oracle(t, ct_restarts, ct_seed);
        j["oracle_tau"] = o.tau;
        j["oracle_restarts"] = o.restarts;
        timings["oracle_seconds"] = o.seconds;
      }
      j["timings"] = timings;
      emit(j.dump(2) + "\n", ct_out, out);
    } else if (*cl) {
      finish_config(cl_cfg, cl_flags);
      if (!(cl_m > 1.0 && cl_m < 3.0)) throw InvalidArgument("fuzziness must lie in (1, 3)");
      FeatureStack stack;
      if (!cl_manifest.empty()) {
        cl_cfg.fuzziness_grid = {cl_m};
        const auto inputs = load_subjects(cl_cfg, cl_manifest);
        if (inputs.size() < 2) throw InvalidArgument("clustering needs at least 2 subjects");
        std::vector<SubjectRecord> recs(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) recs[i] = analyze_subject(cl_cfg, inputs[i]);
        stack.features.resize(static_cast<Eigen::Index>(recs.size()), recs.front().topology.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
          if (recs[i].topology.size() != stack.features.cols()) {
            throw ValidationError("subject '" + recs[i].subject_id + "' has a different channel count");
          }
          stack.subjects.push_back(recs[i].subject_id);
          stack.features.row(static_cast<Eigen::Index>(i)) = recs[i].topology.transpose();
        }
        if (cl_labels.empty()) {
          bool all = true;
          for (const auto& in : inputs) all = all && in.label.has_value();
          if (all) cl_labels = cl_manifest;
        }
      } else if (!cl_topologies.empty()) {
        const auto t = csv::read_file(cl_topologies);
        if (t.header.size() < 2 || t.header.front() != "subject_id") {
          throw ParseError("topologies header must start with subject_id", t.header_line);
        }
        const auto d = static_cast<Eigen::Index>(t.header.size() - 1);
        stack.features.resize(static_cast<Eigen::Index>(t.rows.size()), d);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
          stack.subjects.push_back(t.rows[i].fields[0]);
          for (Eigen::Index k = 0; k < d; ++k) {
            stack.features(static_cast<Eigen::Index>(i), k) =
                csv::parse_double(t.rows[i].fields[static_cast<std::size_t>(k + 1)], t.rows[i].line);
          }
        }
      } else {
        throw InvalidArgument("cluster needs --manifest or --topologies");
      }
      FcmOptions o;
      o.clusters = cl_cfg.clusters;
      o.fuzziness = cl_m;
      o.seed = cl_cfg.seed;
      o.max_iter = cl_cfg.max_iter;
      o.tol = cl_cfg.tol;
      o.restarts = cl_cfg.restarts;
      o.cutoff = cl_cfg.cutoff;
      const auto fit = fuzzy_cmeans(stack, o);
      csv::write_text(cl_out, format_memberships(stack.subjects, fit));
      json j;
      j["m"] = cl_m;
      j["method"] = method_name(cl_cfg.method);
      j["objective"] = fit.objective();
      j["iterations"] = fit.iterations;
      j["converged"] = fit.converged;
      if (!cl_labels.empty() && o.clusters == 2) {
        const auto c = confusion_matrix(fit.hard_labels, labels_for(stack.subjects, manifest_labels(cl_labels)));
        j["accuracy"] = accuracy(c);
        j["confusion"] = confusion_json(c);
      } else {
        j["accuracy"] = nullptr;
        j["confusion"] = nullptr;
      }
      emit(j.dump(2) + "\n", cl_summary, out);
    } else if (*pl) {
      finish_config(pl_cfg, pl_flags);
      const auto report = run_pipeline(pl_cfg, fs::path(pl_manifest));
      run_report_export(report, pl_out);
      for (const auto& r : report.results) {
        if (!r.error.empty()) err << "warning: m=" << r.m << ": " << r.error << "\n";
      }
    } else if (*ev) {
      const auto mem = load_memberships(ev_mem);
      if (mem.u.cols() != 2) throw InvalidArgument("evaluate supports S = 2 memberships");
      const auto c = confusion_matrix(mem.hard_labels, labels_for(mem.subjects, manifest_labels(ev_labels)));
      json j;
      j["n"] = c.n_total;
      j["accuracy"] = accuracy(c);
      j["confusion"] = confusion_json(c);
      emit(j.dump(2) + "\n", ev_out, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return ExitCode::numerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return ExitCode::io;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return ExitCode::validation;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return ExitCode::validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::internal;
  }
  return ExitCode::ok;
}

}  // namespace tailtopo::cli

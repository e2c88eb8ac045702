#include "tailtopo/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "tailtopo/csv.hpp"
#include "tailtopo/error.hpp"
#include "tailtopo/ingest.hpp"
#include "tailtopo/parallel.hpp"
#include "tailtopo/spectral.hpp"
#include "tailtopo/tpdm.hpp"

namespace tailtopo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Re-throws `e` as the same category with subject/stage context prepended.
[[noreturn]] void rethrow_with_context(const std::string& subject, const std::string& stage) {
  const std::string ctx = "subject '" + subject + "', stage " + stage + ": ";
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(ctx + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + e.what());
  } catch (const IoError& e) {
    throw IoError(ctx + e.what());
  }
}

template <class F>
auto staged(const std::string& subject, const char* stage, std::vector<StageTiming>* timings, F&& f) {
  const auto t0 = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      if (timings) timings->push_back({stage, subject, seconds_since(t0)});
    } else {
      auto r = f();
      if (timings) timings->push_back({stage, subject, seconds_since(t0)});
      return r;
    }
  } catch (const Error&) {
    rethrow_with_context(subject, stage);
  }
}

std::vector<std::string> ordered_channels(const std::vector<std::string>& channels,
                                          const ResolvedPartition& part) {
  std::vector<std::string> out;
  for (auto j : part.x_index) out.push_back(channels[static_cast<std::size_t>(j)]);
  for (auto j : part.y_index) out.push_back(channels[static_cast<std::size_t>(j)]);
  return out;
}

bool has_feature_metadata(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  return !csv::comment_value(table, "band").empty();
}

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt_m(double m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", m);
  return buf;
}

}  // namespace

Method parse_method(const std::string& text) {
  if (text == "ctd") return Method::ctd;
  if (text == "cca") return Method::cca;
  throw InvalidArgument("method must be ctd or cca, got '" + text + "'");
}

std::string method_name(Method m) { return m == Method::ctd ? "ctd" : "cca"; }

InputKind parse_input_kind(const std::string& text) {
  if (text == "auto") return InputKind::automatic;
  if (text == "signal") return InputKind::signal;
  if (text == "feature") return InputKind::feature;
  throw InvalidArgument("input kind must be auto, signal or feature, got '" + text + "'");
}

void PipelineConfig::validate() const {
  if (!(block_seconds > 0.0)) throw InvalidArgument("block_seconds must be positive");
  if (!(sampling_rate_hz > 0.0)) throw InvalidArgument("sampling_rate_hz must be positive");
  if (!(tail_quantile > 0.5 && tail_quantile < 1.0)) throw InvalidArgument("tail_quantile must lie in (0.5, 1)");
  if (clusters < 2) throw InvalidArgument("clusters must be at least 2");
  if (fuzziness_grid.empty()) throw InvalidArgument("fuzziness grid is empty");
  for (double m : fuzziness_grid) {
    if (!(m > 1.0 && m < 3.0)) throw InvalidArgument("fuzziness " + fmt_m(m) + " outside (1, 3)");
  }
  if (!(cutoff > 1.0 / clusters && cutoff <= 1.0)) throw InvalidArgument("cutoff must lie in (1/S, 1]");
  if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (!(margin.rank_offset >= 0.0 && margin.rank_offset < 1.0)) throw InvalidArgument("rank offset must lie in [0, 1)");
}

int RunReport::best_index() const {
  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.fit) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& b = results[static_cast<std::size_t>(best)];
    if (r.accuracy && b.accuracy) {
      if (*r.accuracy > *b.accuracy) best = static_cast<int>(i);
    } else if (r.fit->objective() < b.fit->objective()) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

SubjectRecord analyze_subject(const PipelineConfig& config, const SubjectInput& input,
                              std::vector<StageTiming>* timings) {
  const auto& id = input.subject_id;
  const auto& panel = input.panel;
  const auto partition = config.partition.value_or(ChannelPartition::halves(panel.channels));
  const auto part = staged(id, "partition", nullptr, [&] { return resolve_partition(partition, panel.channels); });

  SubjectRecord rec;
  rec.subject_id = id;
  rec.label = input.label;
  rec.blocks = static_cast<std::size_t>(panel.num_blocks());
  CtdSolution sol;
  if (config.method == Method::ctd) {
    const Matrix z = staged(id, "standardize", timings, [&] { return rank_standardize(panel, config.margin); });
    const Tpdm tpdm = staged(id, "tpdm", timings, [&] {
      return estimate_tpdm(z, config.tail_quantile, TpdmOptions{panel.channels, partition});
    });
    sol = staged(id, "ctd", timings, [&] { return solve_ctd(tpdm); });
    rec.exceedances = tpdm.exceedance_count;
    rec.radius = tpdm.radius;
    rec.warnings = tpdm.warnings;
  } else {
    sol = staged(id, "cca", timings, [&] { return cca_canonical_vectors(panel.values, part).solution; });
  }
  rec.tau = sol.tau;
  rec.lambda1 = sol.lambda1;
  rec.lambda2 = sol.lambda2;
  rec.topology.resize(sol.lambda1.size() + sol.lambda2.size());
  rec.topology << sol.lambda1.cwiseAbs(), sol.lambda2.cwiseAbs();
  rec.condition = sol.condition;
  return rec;
}

RunReport run_pipeline(const PipelineConfig& config, const std::vector<SubjectInput>& inputs) {
  config.validate();
  if (inputs.size() < 2) throw InvalidArgument("the pipeline needs at least 2 subjects, got " + std::to_string(inputs.size()));
  {
    std::map<std::string, int> seen;
    for (const auto& s : inputs) {
      if (seen[s.subject_id]++) throw ValidationError("duplicate subject id '" + s.subject_id + "'");
    }
  }

  RunReport report;
  report.config = config;
  const auto& first = inputs.front().panel;
  const auto partition = config.partition.value_or(ChannelPartition::halves(first.channels));
  report.config.partition = partition;
  const auto part0 = resolve_partition(partition, first.channels);
  report.channels = ordered_channels(first.channels, part0);

  const auto n = inputs.size();
  report.subjects.resize(n);
  std::vector<std::vector<StageTiming>> sub_timings(n);
  parallel_for(n, [&](std::size_t i) {
    report.subjects[i] = analyze_subject(report.config, inputs[i], &sub_timings[i]);
  });
  for (auto& t : sub_timings) report.timings.insert(report.timings.end(), t.begin(), t.end());

  const auto d = static_cast<Eigen::Index>(report.channels.size());
  report.stack.features.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = report.subjects[i];
    if (rec.topology.size() != d) {
      throw ValidationError("subject '" + rec.subject_id + "' has " + std::to_string(rec.topology.size()) +
                            " topology weights, expected " + std::to_string(d));
    }
    report.stack.subjects.push_back(rec.subject_id);
    report.stack.features.row(static_cast<Eigen::Index>(i)) = rec.topology.transpose();
  }

  std::vector<int> truth;
  bool labelled = config.clusters == 2;
  for (const auto& rec : report.subjects) {
    if (!rec.label || (*rec.label != 1 && *rec.label != 2)) labelled = false;
    else truth.push_back(*rec.label);
  }

  const auto& grid = config.fuzziness_grid;
  report.results.resize(grid.size());
  std::vector<double> cluster_seconds(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t k) {
    auto& res = report.results[k];
    res.m = grid[k];
    const auto t0 = Clock::now();
    try {
      FcmOptions o;
      o.clusters = config.clusters;
      o.fuzziness = grid[k];
      o.seed = config.seed;
      o.max_iter = config.max_iter;
      o.tol = config.tol;
      o.restarts = config.restarts;
      o.cutoff = config.cutoff;
      res.fit = fuzzy_cmeans(report.stack, o);
      if (labelled) {
        res.confusion = confusion_matrix(res.fit->hard_labels, truth);
        res.accuracy = accuracy(*res.confusion);
      }
    } catch (const Error& e) {
      res.fit.reset();
      res.error = e.what();
    }
    cluster_seconds[k] = seconds_since(t0);
  });
  for (std::size_t k = 0; k < grid.size(); ++k) {
    report.timings.push_back({"cluster_m" + fmt_m(grid[k]), "", cluster_seconds[k]});
  }
  return report;
}

std::vector<SubjectInput> load_subjects(const PipelineConfig& config, const std::filesystem::path& manifest,
                                        std::vector<StageTiming>* timings) {
  const auto entries = load_manifest(manifest);
  std::vector<SubjectInput> out(entries.size());
  std::vector<std::vector<StageTiming>> sub_timings(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    auto* tm = timings ? &sub_timings[i] : nullptr;
    out[i].subject_id = e.subject_id;
    out[i].label = e.label;
    bool feature = config.input == InputKind::feature;
    if (config.input == InputKind::automatic) {
      feature = staged(e.subject_id, "load", nullptr, [&] { return has_feature_metadata(e.path); });
    }
    if (feature) {
      out[i].panel = staged(e.subject_id, "load", tm, [&] { return load_feature_panel(e.path, {}, e.subject_id); });
    } else {
      const auto sig = staged(e.subject_id, "load", tm,
                              [&] { return load_signal_panel(e.path, config.sampling_rate_hz, e.subject_id); });
      out[i].panel = staged(e.subject_id, "features", tm, [&] {
        const auto a = block_length_for(config.block_seconds, config.sampling_rate_hz);
        return band_periodogram(sig, config.band, a, BandPeriodogramOptions{config.detrend});
      });
    }
  });
  if (timings) {
    for (auto& t : sub_timings) timings->insert(timings->end(), t.begin(), t.end());
  }
  return out;
}

RunReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& manifest) {
  config.validate();
  std::vector<StageTiming> load_timings;
  const auto inputs = load_subjects(config, manifest, &load_timings);
  auto report = run_pipeline(config, inputs);
  report.timings.insert(report.timings.begin(), load_timings.begin(), load_timings.end());
  return report;
}

std::string membership_file_name(double m) { return "memberships_m" + fmt_m(m) + ".csv"; }

std::string format_memberships(const std::vector<std::string>& subjects, const MembershipMatrix& fit) {
  std::string out = "subject_id";
  for (Eigen::Index s = 0; s < fit.u.cols(); ++s) out += ",u_" + std::to_string(s + 1);
  out += ",hard_label,fuzzy_flag\n";
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    out += subjects[i];
    for (Eigen::Index s = 0; s < fit.u.cols(); ++s) {
      out += "," + csv::format_double(fit.u(static_cast<Eigen::Index>(i), s));
    }
    out += "," + std::to_string(fit.hard_labels[i]) + "," + (fit.fuzzy_flags[i] ? "1" : "0") + "\n";
  }
  return out;
}

std::string summary_json(const RunReport& report, bool include_timings) {
  const auto& c = report.config;
  nlohmann::ordered_json j;
  j["method"] = method_name(c.method);
  j["margin"] = MarginSpec::family_name(c.margin.family);
  j["band"] = c.band.tag();
  j["tail_quantile"] = c.tail_quantile;
  j["clusters"] = c.clusters;
  j["cutoff"] = c.cutoff;
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["partition"] = c.partition ? c.partition->to_string() : std::string();
  j["fuzziness_grid"] = c.fuzziness_grid;
  j["channels"] = report.channels;

  auto subjects = nlohmann::ordered_json::array();
  for (const auto& s : report.subjects) {
    nlohmann::ordered_json r;
    r["subject_id"] = s.subject_id;
    r["label"] = s.label ? nlohmann::ordered_json(*s.label) : nlohmann::ordered_json(nullptr);
    r["tau"] = s.tau;
    r["blocks"] = s.blocks;
    if (c.method == Method::ctd) {
      r["exceedances"] = s.exceedances;
      r["radius"] = s.radius;
    }
    r["lambda1"] = vec_json(s.lambda1);
    r["lambda2"] = vec_json(s.lambda2);
    const auto& cr = s.condition;
    r["condition_report"] = {{"min_eig_xx", cr.min_eig_xx}, {"min_eig_yy", cr.min_eig_yy},
                             {"ridge_xx", cr.ridge_xx},     {"ridge_yy", cr.ridge_yy},
                             {"top_gap", std::isfinite(cr.top_gap) ? nlohmann::ordered_json(cr.top_gap)
                                                                   : nlohmann::ordered_json(nullptr)},
                             {"degenerate", cr.degenerate}};
    r["warnings"] = s.warnings;
    subjects.push_back(r);
  }
  j["subjects"] = subjects;

  auto results = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json o;
    o["m"] = r.m;
    if (r.fit) {
      o["memberships_file"] = membership_file_name(r.m);
      o["objective"] = r.fit->objective();
      o["iterations"] = r.fit->iterations;
      o["converged"] = r.fit->converged;
      int n_fuzzy = 0;
      for (bool f : r.fit->fuzzy_flags) n_fuzzy += f ? 1 : 0;
      o["fuzzy_count"] = n_fuzzy;
      o["hard_labels"] = r.fit->hard_labels;
    }
    o["accuracy"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nlohmann::ordered_json(nullptr);
    if (r.confusion) {
      const auto& m = r.confusion->m;
      o["confusion"] = {{m[0][0], m[0][1]}, {m[1][0], m[1][1]}};
    } else {
      o["confusion"] = nullptr;
    }
    if (!r.error.empty()) o["error"] = r.error;
    results.push_back(o);
  }
  j["results"] = results;
  const int best = report.best_index();
  j["best_m"] = best >= 0 ? nlohmann::ordered_json(report.results[static_cast<std::size_t>(best)].m)
                          : nlohmann::ordered_json(nullptr);

  if (include_timings) {
    std::map<std::string, double> totals;
    for (const auto& t : report.timings) totals[t.stage] += t.seconds;
    j["timings"] = totals;
  }
  return j.dump(2) + "\n";
}

void run_report_export(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  for (const auto& r : report.results) {
    if (r.fit) csv::write_text(dir / membership_file_name(r.m), format_memberships(report.stack.subjects, *r.fit));
  }
  std::vector<std::string> header{"subject_id"};
  header.insert(header.end(), report.channels.begin(), report.channels.end());
  std::string topo;
  for (std::size_t k = 0; k < header.size(); ++k) topo += (k ? "," : "") + header[k];
  topo += "\n";
  for (std::size_t i = 0; i < report.subjects.size(); ++i) {
    topo += report.subjects[i].subject_id;
    const auto& t = report.subjects[i].topology;
    for (Eigen::Index k = 0; k < t.size(); ++k) topo += "," + csv::format_double(t(k));
    topo += "\n";
  }
  csv::write_text(dir / "topologies.csv", topo);
  csv::write_text(dir / "summary.json", summary_json(report));

  std::string tm = "stage,subject_id,seconds\n";
  for (const auto& t : report.timings) tm += t.stage + "," + t.subject + "," + csv::format_double(t.seconds) + "\n";
  csv::write_text(dir / "timings.csv", tm);
}

MembershipTable load_memberships(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto& h = table.header;
  if (h.size() < 4 || h.front() != "subject_id" || h[h.size() - 2] != "hard_label" || h.back() != "fuzzy_flag") {
    throw ParseError("membership header must be subject_id,u_1..u_S,hard_label,fuzzy_flag", table.header_line);
  }
  const auto s = static_cast<Eigen::Index>(h.size() - 3);
  for (Eigen::Index k = 0; k < s; ++k) {
    if (h[static_cast<std::size_t>(k + 1)] != "u_" + std::to_string(k + 1)) {
      throw ParseError("expected column u_" + std::to_string(k + 1), table.header_line);
    }
  }
  MembershipTable out;
  out.u.resize(static_cast<Eigen::Index>(table.rows.size()), s);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    out.subjects.push_back(row.fields[0]);
    for (Eigen::Index k = 0; k < s; ++k) {
      out.u(static_cast<Eigen::Index>(i), k) = csv::parse_double(row.fields[static_cast<std::size_t>(k + 1)], row.line);
    }
    const double lab = csv::parse_double(row.fields[h.size() - 2], row.line);
    const double flag = csv::parse_double(row.fields.back(), row.line);
    if (lab != std::floor(lab) || lab < 1 || lab > static_cast<double>(s)) {
      throw ParseError("hard_label must be an integer in 1..S", row.line);
    }
    if (flag != 0.0 && flag != 1.0) throw ParseError("fuzzy_flag must be 0 or 1", row.line);
    out.hard_labels.push_back(static_cast<int>(lab));
    out.fuzzy_flags.push_back(flag == 1.0);
  }
  return out;
}

}  // namespace tailtopo

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tailtopo/cluster.hpp"
#include "tailtopo/ctd.hpp"
#include "tailtopo/margins.hpp"
#include "tailtopo/types.hpp"

namespace tailtopo {

enum class Method { ctd, cca };
Method parse_method(const std::string& text);
std::string method_name(Method m);

enum class InputKind { automatic, signal, feature };
InputKind parse_input_kind(const std::string& text);

struct PipelineConfig {
  BandSpec band = BandSpec::standard(BandName::gamma);  // used for signal inputs only
  double block_seconds = 2.0;
  double sampling_rate_hz = 256.0;  // signal inputs only
  bool detrend = false;
  MarginSpec margin{MarginFamily::frechet2, 0.0};
  double tail_quantile = 0.95;
  int clusters = 2;
  std::vector<double> fuzziness_grid{1.1, 1.2, 1.5, 1.8, 2.0, 2.2, 2.5};
  double cutoff = 0.7;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;
  std::optional<ChannelPartition> partition;  // halves of the channel list when unset
  Method method = Method::ctd;
  InputKind input = InputKind::automatic;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct SubjectInput {
  std::string subject_id;
  std::optional<int> label;
  BandPeriodogramPanel panel;
};

struct SubjectRecord {
  std::string subject_id;
  std::optional<int> label;
  double tau = 0.0;  // CTD tau, or the squared canonical correlation for method=cca
  Vector topology;   // |lambda1|, |lambda2| stacked (length D)
  Vector lambda1;
  Vector lambda2;
  ConditionReport condition;
  std::size_t blocks = 0;
  std::size_t exceedances = 0;  // ctd only
  double radius = 0.0;          // ctd only
  std::vector<std::string> warnings;
};

struct FuzzinessResult {
  double m = 0.0;
  std::optional<MembershipMatrix> fit;
  std::optional<ConfusionMatrix> confusion;
  std::optional<double> accuracy;
  std::string error;  // set when clustering failed at this m
};

struct StageTiming {
  std::string stage;
  std::string subject;  // empty for run-level stages
  double seconds = 0.0;
};

struct RunReport {
  PipelineConfig config;
  std::vector<std::string> channels;  // X channels then Y channels
  std::vector<SubjectRecord> subjects;
  FeatureStack stack;
  std::vector<FuzzinessResult> results;
  std::vector<StageTiming> timings;

  // Index into `results` of the highest accuracy (first on ties), or of the lowest objective
  // when no labels are available. -1 when every m failed.
  int best_index() const;
};

// Per-subject canonical analysis of one feature panel.
SubjectRecord analyze_subject(const PipelineConfig& config, const SubjectInput& input,
                              std::vector<StageTiming>* timings = nullptr);

// Steps: per subject standardize -> estimate_tpdm -> solve_ctd (or sample CCA on the raw
// features), stack, then fuzzy c-means and accuracy for each m of the grid.
RunReport run_pipeline(const PipelineConfig& config, const std::vector<SubjectInput>& inputs);
// Loads the manifest, computing band periodograms for signal files.
RunReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& manifest);

std::vector<SubjectInput> load_subjects(const PipelineConfig& config,
                                        const std::filesystem::path& manifest,
                                        std::vector<StageTiming>* timings = nullptr);

// Membership CSV: subject_id,u_1..u_S,hard_label,fuzzy_flag.
std::string format_memberships(const std::vector<std::string>& subjects, const MembershipMatrix& fit);
std::string membership_file_name(double m);

// JSON summary. Timing fields live under "timings" only; everything else is a deterministic
// function of the inputs and seed.
std::string summary_json(const RunReport& report, bool include_timings = true);

// Writes memberships_m<m>.csv, topologies.csv, summary.json and timings.csv into `dir`.
void run_report_export(const RunReport& report, const std::filesystem::path& dir);

struct MembershipTable {
  std::vector<std::string> subjects;
  Matrix u;
  std::vector<int> hard_labels;
  std::vector<bool> fuzzy_flags;
};
MembershipTable load_memberships(const std::filesystem::path& path);

}  // namespace tailtopo

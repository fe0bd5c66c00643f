#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "council/transcript.hpp"

namespace council::pipeline {

namespace fs = std::filesystem;

/// Bad or incomplete configuration, or a missing upstream artifact.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct RegressionSpec {
  std::string name;
  fs::path data;
  std::string model;  // "ols" | "logit"
  std::string outcome;
  std::vector<std::string> covariates;
  std::vector<std::string> fixed_effects;
  std::string cluster;  // empty: heteroskedasticity-robust
};

struct DidSpec {
  bool enabled = false;
  fs::path panel;
  std::vector<std::string> covariates;  // residualized on when nonempty
  int bootstrap_draws = 999;
  bool include_never_treated = true;
  std::optional<int> min_event;
  std::optional<int> max_event;
  std::optional<fs::path> split_file;  // city,value
  std::string split_name = "characteristic";
};

struct Config {
  fs::path config_path;
  fs::path base_dir;
  fs::path output_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;

  std::optional<fs::path> transcripts;
  std::optional<fs::path> annotations;
  std::optional<fs::path> voters;
  std::optional<fs::path> properties;
  std::optional<fs::path> nicknames;
  std::optional<fs::path> remote_access;
  std::optional<fs::path> speaker_labels;
  std::optional<fs::path> issue_labels;

  transcript::FilterBounds filter;
  bool adjacent_year_fallback = true;
  double name_threshold = 70.0;
  double ewma_alpha = 0.01;
  std::vector<RegressionSpec> regressions;
  DidSpec did;

  std::string canonical;  // sorted-key JSON of the effective settings
  std::string hash() const { return hex64(fnv1a64(canonical)); }
};

struct LoadOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<fs::path> output_dir;
};

/// Reads a JSON config. Relative paths resolve against the config file's
/// directory; every referenced path must exist.
Config load_config(const fs::path& path, const LoadOptions& overrides = {});

/// `<output_dir>/run-<config hash>`.
fs::path run_directory(const Config& cfg);

struct StageOptions {
  bool force = false;  // replace an existing stage directory
};

/// Each command writes into `<run>/<stage>.staging` and renames it to
/// `<run>/<stage>` when complete. An existing stage directory is an error
/// unless `force` is set.
void cmd_parse(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_annotate_ingest(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_link(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_validate(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_stats(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_did(const Config& cfg, const StageOptions& opt, std::ostream& log);
void cmd_report(const Config& cfg, const StageOptions& opt, std::ostream& log);

/// Every stage in order; stages without configured inputs are skipped.
void cmd_all(const Config& cfg, const StageOptions& opt, std::ostream& log);

/// Transcript file name `<city>_<YYYY-MM-DD>[_<channel>].txt`.
std::optional<transcript::MeetingInfo> meeting_info_from_filename(const std::string& filename);

}  // namespace council::pipeline

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "council/annotations.hpp"
#include "council/pipeline.hpp"
#include "council/transcript.hpp"

namespace council::pipeline::detail {

using nlohmann::json;

/// Output directory for one command, staged and renamed into place.
class Stage {
 public:
  Stage(const Config& cfg, std::string name, const StageOptions& opt);
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;
  ~Stage();

  const fs::path& dir() const { return staging_; }
  void write_text(const std::string& rel, const std::string& content);
  void write_json(const std::string& rel, const json& doc);
  void commit();

 private:
  std::string name_;
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

/// Provenance block embedded in every JSON report.
json meta(const Config& cfg, const std::string& command, bool stochastic);

/// Path of an upstream artifact, or ConfigError naming the producing command.
fs::path upstream(const Config& cfg, const std::string& stage, const std::string& file, const std::string& command);

std::string read_file(const fs::path& p);
std::string dump(const json& doc);  // 2-space indent, trailing newline

json meeting_to_json(const transcript::MeetingRecord& m);
transcript::MeetingRecord meeting_from_json(const json& j);
std::vector<transcript::MeetingRecord> load_meetings(const Config& cfg);

json issue_to_json(const annotations::IssueAnnotation& a);

struct MeetingIssues {
  std::string meeting;
  std::vector<annotations::IssueAnnotation> issues;
};
std::vector<MeetingIssues> load_issues(const Config& cfg);

/// JSON number, or null for a non-finite value.
json num(double v);

}  // namespace council::pipeline::detail

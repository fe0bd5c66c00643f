#include "council/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "council/annotations.hpp"
#include "council/common.hpp"
#include "council/csv.hpp"
#include "council/linkage.hpp"
#include "council/text.hpp"
#include "pipeline_internal.hpp"

namespace council::pipeline {

using detail::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return s;
}

// ---- config ----

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_array()) throw ConfigError(where + "." + key + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

Config load_config(const fs::path& path, const LoadOptions& overrides) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  reject_unknown(doc, {"output_dir", "seed", "inputs", "filter", "linkage", "validation", "stats", "did"}, "config");

  Config cfg;
  cfg.config_path = fs::absolute(path);
  cfg.base_dir = cfg.config_path.parent_path();
  auto resolve = [&](const std::string& s) {
    fs::path p(s);
    return p.is_absolute() ? p : (cfg.base_dir / p).lexically_normal();
  };
  auto existing = [&](const std::string& s, const std::string& what) {
    auto p = resolve(s);
    if (!fs::exists(p)) throw ConfigError(what + " does not exist: " + p.string());
    return p;
  };

  if (auto it = doc.find("seed"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (overrides.seed) cfg.seed = overrides.seed;
  cfg.jobs = overrides.jobs.value_or(0);
  if (overrides.output_dir) {
    cfg.output_dir = fs::absolute(*overrides.output_dir);
  } else {
    cfg.output_dir = resolve(get_as<std::string>(doc, "output_dir", "config", "out"));
  }

  if (auto it = doc.find("inputs"); it != doc.end()) {
    const json& in = *it;
    reject_unknown(in, {"transcripts", "annotations", "voters", "properties", "nicknames", "remote_access",
                        "speaker_labels", "issue_labels"},
                   "inputs");
    auto opt_path = [&](const char* key) -> std::optional<fs::path> {
      auto v = get_as<std::string>(in, key, "inputs", "");
      if (v.empty()) return std::nullopt;
      return existing(v, std::string("inputs.") + key);
    };
    cfg.transcripts = opt_path("transcripts");
    cfg.annotations = opt_path("annotations");
    cfg.voters = opt_path("voters");
    cfg.properties = opt_path("properties");
    cfg.nicknames = opt_path("nicknames");
    cfg.remote_access = opt_path("remote_access");
    cfg.speaker_labels = opt_path("speaker_labels");
    cfg.issue_labels = opt_path("issue_labels");
  }
  if (auto it = doc.find("filter"); it != doc.end()) {
    reject_unknown(*it, {"min_seconds", "max_seconds"}, "filter");
    cfg.filter.min_seconds = get_as<std::int64_t>(*it, "min_seconds", "filter", cfg.filter.min_seconds);
    cfg.filter.max_seconds = get_as<std::int64_t>(*it, "max_seconds", "filter", cfg.filter.max_seconds);
    if (cfg.filter.min_seconds > cfg.filter.max_seconds) throw ConfigError("filter.min_seconds exceeds max_seconds");
  }
  if (auto it = doc.find("linkage"); it != doc.end()) {
    reject_unknown(*it, {"adjacent_year_fallback"}, "linkage");
    cfg.adjacent_year_fallback = get_as<bool>(*it, "adjacent_year_fallback", "linkage", true);
  }
  if (auto it = doc.find("validation"); it != doc.end()) {
    reject_unknown(*it, {"name_threshold"}, "validation");
    cfg.name_threshold = get_as<double>(*it, "name_threshold", "validation", 70.0);
  }
  if (auto it = doc.find("stats"); it != doc.end()) {
    reject_unknown(*it, {"ewma_alpha", "regressions"}, "stats");
    cfg.ewma_alpha = get_as<double>(*it, "ewma_alpha", "stats", 0.01);
    if (!(cfg.ewma_alpha > 0.0 && cfg.ewma_alpha <= 1.0)) throw ConfigError("stats.ewma_alpha must lie in (0, 1]");
    if (auto r = it->find("regressions"); r != it->end()) {
      if (!r->is_array()) throw ConfigError("stats.regressions must be a list");
      std::set<std::string> names;
      for (std::size_t i = 0; i < r->size(); ++i) {
        const json& s = (*r)[i];
        const std::string where = "stats.regressions[" + std::to_string(i) + "]";
        reject_unknown(s, {"name", "data", "model", "outcome", "covariates", "fixed_effects", "cluster"}, where);
        RegressionSpec spec;
        spec.name = get_as<std::string>(s, "name", where, "");
        if (spec.name.empty()) throw ConfigError(where + ".name is required");
        if (!names.insert(spec.name).second) throw ConfigError("duplicate regression name '" + spec.name + "'");
        spec.data = existing(get_as<std::string>(s, "data", where, ""), where + ".data");
        spec.model = get_as<std::string>(s, "model", where, "ols");
        if (spec.model != "ols" && spec.model != "logit") throw ConfigError(where + ".model must be ols or logit");
        spec.outcome = get_as<std::string>(s, "outcome", where, "");
        if (spec.outcome.empty()) throw ConfigError(where + ".outcome is required");
        spec.covariates = string_list(s, "covariates", where);
        spec.fixed_effects = string_list(s, "fixed_effects", where);
        spec.cluster = get_as<std::string>(s, "cluster", where, "");
        cfg.regressions.push_back(std::move(spec));
      }
    }
  }
  if (auto it = doc.find("did"); it != doc.end()) {
    const json& d = *it;
    reject_unknown(d, {"panel", "covariates", "bootstrap_draws", "include_never_treated", "event_window", "median_split"},
                   "did");
    cfg.did.enabled = true;
    auto panel = get_as<std::string>(d, "panel", "did", "");
    if (panel.empty()) throw ConfigError("did.panel is required");
    cfg.did.panel = existing(panel, "did.panel");
    cfg.did.covariates = string_list(d, "covariates", "did");
    cfg.did.bootstrap_draws = get_as<int>(d, "bootstrap_draws", "did", 999);
    if (cfg.did.bootstrap_draws < 2) throw ConfigError("did.bootstrap_draws must be at least 2");
    cfg.did.include_never_treated = get_as<bool>(d, "include_never_treated", "did", true);
    if (auto w = d.find("event_window"); w != d.end() && !w->is_null()) {
      if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number_integer() || !(*w)[1].is_number_integer()) {
        throw ConfigError("did.event_window must be [min, max] integers");
      }
      cfg.did.min_event = (*w)[0].get<int>();
      cfg.did.max_event = (*w)[1].get<int>();
    }
    if (auto m = d.find("median_split"); m != d.end() && !m->is_null()) {
      reject_unknown(*m, {"file", "name"}, "did.median_split");
      cfg.did.split_file = existing(get_as<std::string>(*m, "file", "did.median_split", ""), "did.median_split.file");
      cfg.did.split_name = get_as<std::string>(*m, "name", "did.median_split", "characteristic");
    }
  }

  json canon = doc;
  canon.erase("output_dir");
  canon["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  canon["version"] = kVersion;
  cfg.canonical = canon.dump();
  return cfg;
}

fs::path run_directory(const Config& cfg) { return cfg.output_dir / ("run-" + cfg.hash()); }

std::optional<transcript::MeetingInfo> meeting_info_from_filename(const std::string& filename) {
  fs::path p(filename);
  if (p.extension() != ".txt") return std::nullopt;
  auto parts = text::split(p.stem().string(), '_');
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto date = transcript::Date::parse(parts[i]);
    if (!date) continue;
    transcript::MeetingInfo info;
    std::vector<std::string> city(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(i));
    info.city = text::join(city, "_");
    info.date = *date;
    if (i + 2 == parts.size()) {
      auto ch = transcript::parse_channel(parts[i + 1]);
      if (!ch) return std::nullopt;
      info.channel = *ch;
    } else if (i + 1 != parts.size()) {
      return std::nullopt;
    }
    if (info.city.empty()) return std::nullopt;
    return info;
  }
  return std::nullopt;
}

// ---- shared helpers ----

namespace detail {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Stage::Stage(const Config& cfg, std::string name, const StageOptions& opt) : name_(std::move(name)) {
  const auto run = run_directory(cfg);
  fs::create_directories(run);
  final_ = run / name_;
  staging_ = run / (name_ + ".staging");
  if (fs::exists(final_) && !opt.force) {
    throw ConfigError("stage output " + final_.string() + " already exists; pass --force to replace it");
  }
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

Stage::~Stage() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void Stage::write_text(const std::string& rel, const std::string& content) {
  const auto p = staging_ / rel;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

void Stage::write_json(const std::string& rel, const json& doc) { write_text(rel, dump(doc)); }

void Stage::commit() {
  fs::path old;
  if (fs::exists(final_)) {
    old = final_;
    old += ".old";
    fs::remove_all(old);
    fs::rename(final_, old);
  }
  fs::rename(staging_, final_);
  if (!old.empty()) fs::remove_all(old);
  committed_ = true;
}

json meta(const Config& cfg, const std::string& command, bool stochastic) {
  json m = {{"version", kVersion}, {"config_hash", cfg.hash()}, {"command", command}};
  if (stochastic) m["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  return m;
}

fs::path upstream(const Config& cfg, const std::string& stage, const std::string& file, const std::string& command) {
  auto p = run_directory(cfg) / stage / file;
  if (!fs::exists(p)) {
    throw ConfigError("missing upstream artifact " + p.string() + "; run `councilkit " + command + "` first");
  }
  return p;
}

json meeting_to_json(const transcript::MeetingRecord& m) {
  json segs = json::array();
  for (const auto& s : m.segments) {
    json shares = json::array();
    for (const auto& sh : s.shares) shares.push_back({{"speaker", sh.speaker_id}, {"fraction", sh.fraction}});
    segs.push_back({{"start", s.start.to_string()}, {"end", s.end.to_string()}, {"shares", shares}, {"text", s.text}});
  }
  return {{"id", m.id()},
          {"city", m.info.city},
          {"date", m.info.date.to_string()},
          {"channel", std::string(transcript::channel_name(m.info.channel))},
          {"duration_seconds", m.duration_seconds()},
          {"segments", segs}};
}

transcript::MeetingRecord meeting_from_json(const json& j) {
  transcript::MeetingRecord m;
  m.info.city = j.at("city").get<std::string>();
  m.info.date = transcript::Date::parse(j.at("date").get<std::string>()).value();
  m.info.channel = transcript::parse_channel(j.at("channel").get<std::string>()).value();
  for (const auto& s : j.at("segments")) {
    transcript::DiarizedSegment seg;
    seg.start = transcript::TimeStamp::parse(s.at("start").get<std::string>()).value();
    seg.end = transcript::TimeStamp::parse(s.at("end").get<std::string>()).value();
    for (const auto& sh : s.at("shares")) {
      seg.shares.push_back({sh.at("speaker").get<std::string>(), sh.at("fraction").get<double>()});
    }
    seg.text = s.at("text").get<std::string>();
    m.segments.push_back(std::move(seg));
  }
  return m;
}

std::vector<transcript::MeetingRecord> load_meetings(const Config& cfg) {
  std::istringstream in(read_file(upstream(cfg, "parse", "meetings.ndjson", "parse")));
  std::vector<transcript::MeetingRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(meeting_from_json(json::parse(line)));
  }
  return out;
}

json issue_to_json(const annotations::IssueAnnotation& a) {
  json j = {{"issue", a.issue},
            {"summary", a.summary},
            {"public", a.is_public},
            {"vote", a.vote},
            {"vote_res", a.vote_res ? json(a.vote_res->to_string()) : json("None")},
            {"vote_outcome", a.vote_outcome},
            {"vote_stage", std::string(annotations::to_string(a.vote_stage))},
            {"timestamp_start", a.timestamp_start ? json(a.timestamp_start->to_string()) : json(nullptr)},
            {"timestamp_end", a.timestamp_end ? json(a.timestamp_end->to_string()) : json(nullptr)},
            {"agendized", a.agendized}};
  j["topic_id"] = a.topic_id ? json(*a.topic_id) : json(nullptr);
  return j;
}

std::vector<MeetingIssues> load_issues(const Config& cfg) {
  std::istringstream in(read_file(upstream(cfg, "annotate", "issues.ndjson", "annotate-ingest")));
  std::vector<MeetingIssues> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    out.push_back({j.at("meeting").get<std::string>(), annotations::parse_issues(j.at("issues").dump())});
  }
  return out;
}

}  // namespace detail

using namespace detail;

// ---- parse ----

void cmd_parse(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  if (!cfg.transcripts || !fs::is_directory(*cfg.transcripts)) {
    throw ConfigError("parse needs inputs.transcripts to name an existing directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(*cfg.transcripts)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("transcript directory " + cfg.transcripts->string() + " has no .txt files");

  struct Slot {
    std::optional<transcript::MeetingInfo> info;
    transcript::ParseOutcome outcome;
    std::string failure;
  };
  std::vector<Slot> slots(files.size());
  const auto n = static_cast<std::ptrdiff_t>(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& slot = slots[static_cast<std::size_t>(i)];
    const auto& f = files[static_cast<std::size_t>(i)];
    try {
      slot.info = meeting_info_from_filename(f.filename().string());
      if (!slot.info) {
        slot.failure = "file name must look like <city>_<YYYY-MM-DD>[_<channel>].txt";
        continue;
      }
      std::ifstream in(f, std::ios::binary);
      slot.outcome = transcript::parse_transcript(in, *slot.info);
    } catch (const std::exception& e) {
      slot.failure = e.what();
    }
  }

  Stage stage(cfg, "parse", opt);
  json errors = json::array();
  json warnings = json::array();
  std::vector<transcript::MeetingRecord> parsed;
  std::map<std::string, std::string> file_of;
  std::vector<std::vector<std::string>> manifest;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto name = files[i].filename().string();
    auto& slot = slots[i];
    for (const auto& w : slot.outcome.warnings) warnings.push_back({{"file", name}, {"message", w}});
    if (!slot.failure.empty()) {
      errors.push_back({{"file", name}, {"line", 0}, {"message", slot.failure}});
      manifest.push_back({name, "", "", "", "", "error", slot.failure, "", "", ""});
      continue;
    }
    if (!slot.outcome.ok()) {
      for (const auto& e : slot.outcome.errors) errors.push_back({{"file", name}, {"line", e.line}, {"message", e.message}});
      const auto& first = slot.outcome.errors.front();
      manifest.push_back({name, "", slot.info->city, slot.info->date.to_string(),
                          std::string(transcript::channel_name(slot.info->channel)), "error",
                          "line " + std::to_string(first.line) + ": " + first.message, "", "", ""});
      continue;
    }
    auto rec = std::move(*slot.outcome.record);
    const auto id = rec.id();
    if (auto [it, fresh] = file_of.emplace(id, name); !fresh) {
      const std::string msg = "duplicate meeting " + id + " (also in " + it->second + ")";
      errors.push_back({{"file", name}, {"line", 0}, {"message", msg}});
      manifest.push_back({name, id, rec.info.city, rec.info.date.to_string(),
                          std::string(transcript::channel_name(rec.info.channel)), "error", msg, "", "", ""});
      continue;
    }
    parsed.push_back(std::move(rec));
  }
  if (parsed.empty()) throw ConfigError("no parseable transcripts in " + cfg.transcripts->string());

  auto filtered = transcript::filter_meetings(parsed, cfg.filter);
  std::map<std::string, std::string> status;
  for (const auto& m : filtered.kept) status[m.id()] = "kept";
  for (const auto& d : filtered.dropped) status[d.meeting.id()] = d.reason;
  for (const auto& m : parsed) {
    const auto& s = status[m.id()];
    manifest.push_back({file_of[m.id()], m.id(), m.info.city, m.info.date.to_string(),
                        std::string(transcript::channel_name(m.info.channel)), s == "kept" ? "kept" : "dropped",
                        s == "kept" ? "" : s, std::to_string(m.segments.size()), std::to_string(m.speakers().size()),
                        std::to_string(m.duration_seconds())});
  }
  std::sort(manifest.begin(), manifest.end());

  std::sort(filtered.kept.begin(), filtered.kept.end(),
            [](const auto& a, const auto& b) { return a.id() < b.id(); });
  std::string ndjson;
  for (const auto& m : filtered.kept) ndjson += meeting_to_json(m).dump() + "\n";
  stage.write_text("meetings.ndjson", ndjson);

  std::ostringstream mcsv;
  csv::Writer w(mcsv);
  w.row({"file", "meeting_id", "city", "date", "channel", "status", "reason", "segments", "speakers",
         "duration_seconds"});
  for (const auto& r : manifest) w.row(r);
  stage.write_text("manifest.csv", mcsv.str());

  std::size_t short_n = 0, long_n = 0;
  for (const auto& d : filtered.dropped) (d.reason == "too short" ? short_n : long_n) += 1;
  json report = {{"meta", meta(cfg, "parse", false)},
                 {"files", files.size()},
                 {"parsed", parsed.size()},
                 {"failed", files.size() - parsed.size()},
                 {"kept", filtered.kept.size()},
                 {"dropped_too_short", short_n},
                 {"dropped_too_long", long_n},
                 {"filter", {{"min_seconds", cfg.filter.min_seconds}, {"max_seconds", cfg.filter.max_seconds}}},
                 {"errors", errors},
                 {"warnings", warnings}};
  stage.write_json("report.json", report);
  stage.commit();
  log << "parse: " << parsed.size() << " of " << files.size() << " files parsed, " << filtered.kept.size()
      << " meetings kept\n";
}

// ---- annotate-ingest ----

void cmd_annotate_ingest(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  const auto meetings = load_meetings(cfg);
  if (!cfg.annotations || !fs::is_directory(*cfg.annotations)) {
    throw ConfigError("annotate-ingest needs inputs.annotations to name an existing directory");
  }
  const fs::path dir = *cfg.annotations;
  json errors = json::array();
  json warnings = json::array();
  auto record_error = [&](const std::string& file, const std::string& msg) {
    errors.push_back({{"file", file}, {"message", msg}});
  };

  std::optional<annotations::TopicTaxonomy> taxonomy;
  if (fs::exists(dir / "taxonomy.json")) {
    try {
      taxonomy = annotations::parse_taxonomy(read_file(dir / "taxonomy.json"));
    } catch (const SchemaError& e) {
      record_error("taxonomy.json", e.what());
    }
  }
  std::map<std::string, int> assignments;
  if (fs::exists(dir / "topic_assignments.json")) {
    try {
      assignments = annotations::parse_topic_assignments(read_file(dir / "topic_assignments.json"));
    } catch (const SchemaError& e) {
      record_error("topic_assignments.json", e.what());
    }
  }

  Stage stage(cfg, "annotate", opt);
  std::ostringstream speakers_csv, issues_csv, stance_csv;
  csv::Writer sw(speakers_csv), stw(stance_csv);
  sw.row({"meeting", "city", "date", "speaker_id", "name", "gov", "group", "speaking_seconds"});
  stw.row({"meeting", "city", "year", "comment_id", "score"});
  annotations::write_issue_table_header(issues_csv);
  std::string issues_ndjson;
  std::size_t n_speakers = 0, n_issues = 0, n_stance = 0, speaker_files = 0, issue_files = 0, stance_files = 0;

  for (const auto& m : meetings) {
    const auto id = m.id();
    const auto known = m.speakers();
    const auto times = transcript::speaking_times(m);
    const auto sfile = id + ".speakers.json";
    if (!fs::exists(dir / sfile)) {
      record_error(sfile, "missing speaker annotation");
    } else {
      try {
        auto speakers = annotations::parse_speaker_map(read_file(dir / sfile));
        ++speaker_files;
        for (const auto& s : speakers) {
          if (std::find(known.begin(), known.end(), s.speaker_id) == known.end()) {
            warnings.push_back({{"file", sfile}, {"message", s.speaker_id + " does not occur in the transcript"}});
          }
          auto t = times.find(s.speaker_id);
          sw.row({id, m.info.city, m.info.date.to_string(), s.speaker_id, s.name.value_or(""),
                  std::string(annotations::to_string(s.gov)), std::string(annotations::to_string(s.group)),
                  csv::format_double(t == times.end() ? 0.0 : t->second)});
          ++n_speakers;
        }
      } catch (const SchemaError& e) {
        record_error(sfile, e.what());
      }
    }
    const auto ifile = id + ".issues.json";
    if (!fs::exists(dir / ifile)) {
      record_error(ifile, "missing issue annotation");
    } else {
      try {
        auto issues = annotations::parse_issues(read_file(dir / ifile));
        ++issue_files;
        json arr = json::array();
        for (std::size_t k = 0; k < issues.size(); ++k) {
          if (!issues[k].topic_id) {
            auto a = assignments.find(id + "/" + std::to_string(k));
            if (a != assignments.end()) issues[k].topic_id = a->second;
          }
          arr.push_back(issue_to_json(issues[k]));
        }
        annotations::write_issue_rows(issues_csv, id, issues);
        issues_ndjson += json({{"meeting", id}, {"issues", arr}}).dump() + "\n";
        n_issues += issues.size();
      } catch (const SchemaError& e) {
        record_error(ifile, e.what());
      }
    }
    const auto tfile = id + ".stance.json";
    if (fs::exists(dir / tfile)) {
      try {
        auto scores = annotations::parse_stance(read_file(dir / tfile));
        ++stance_files;
        for (const auto& s : scores) {
          stw.row({id, m.info.city, std::to_string(m.info.date.year), s.comment_id, csv::format_double(s.score)});
          ++n_stance;
        }
      } catch (const SchemaError& e) {
        record_error(tfile, e.what());
      }
    }
  }

  stage.write_text("speakers.csv", speakers_csv.str());
  stage.write_text("issues.csv", issues_csv.str());
  stage.write_text("issues.ndjson", issues_ndjson);
  stage.write_text("stance.csv", stance_csv.str());
  if (taxonomy) {
    json t = json::array();
    for (const auto& e : taxonomy->entries) {
      t.push_back({{"topic_id", e.topic_id}, {"title", e.title}, {"description", e.description}, {"examples", e.examples}});
    }
    stage.write_json("taxonomy.json", t);
  }
  json report = {{"meta", meta(cfg, "annotate-ingest", false)},
                 {"meetings", meetings.size()},
                 {"speaker_files", speaker_files},
                 {"issue_files", issue_files},
                 {"stance_files", stance_files},
                 {"speakers", n_speakers},
                 {"issues", n_issues},
                 {"stance_scores", n_stance},
                 {"taxonomy", taxonomy.has_value()},
                 {"errors", errors},
                 {"warnings", warnings}};
  stage.write_json("report.json", report);
  stage.commit();
  log << "annotate-ingest: " << n_speakers << " speakers, " << n_issues << " issues, " << errors.size()
      << " errors\n";
}

// ---- link ----

void cmd_link(const Config& cfg, const StageOptions& opt, std::ostream& log) {
  const auto meetings = load_meetings(cfg);
  const auto speakers = csv::read_file(upstream(cfg, "annotate", "speakers.csv", "annotate-ingest").string());
  if (!cfg.voters) throw ConfigError("link needs inputs.voters");
  linkage::VoterFile voters;
  try {
    voters = linkage::VoterFile::load_csv(cfg.voters->string());
  } catch (const SchemaError& e) {
    throw ConfigError("voter CSV schema mismatch: " + std::string(e.what()));
  }
  linkage::NicknameTable nicknames;
  if (cfg.nicknames) nicknames = linkage::NicknameTable::load_csv(cfg.nicknames->string());
  std::optional<linkage::PropertyTable> properties;
  if (cfg.properties) properties = linkage::PropertyTable::load_csv(cfg.properties->string());

  std::map<std::string, const transcript::MeetingRecord*> by_id;
  std::map<std::string, linkage::TranscriptIndex> indexes;
  for (const auto& m : meetings) {
    by_id[m.id()] = &m;
    indexes.emplace(m.id(), linkage::TranscriptIndex(m.full_text()));
  }

  const auto mc = speakers.require("meeting"), sc = speakers.require("speaker_id"), nc = speakers.require("name"),
             gc = speakers.require("gov");
  std::vector<linkage::LinkTask> tasks;
  std::vector<std::string> task_meeting;
  for (const auto& row : speakers.rows()) {
    if (row[gc] != "NG" || text::trim(row[nc]).empty()) continue;
    auto it = by_id.find(row[mc]);
    if (it == by_id.end()) continue;
    linkage::LinkTask t;
    t.speaker_key = row[mc] + "|" + row[sc];
    t.raw_name = row[nc];
    t.city = it->second->info.city;
    t.year = it->second->info.date.year;
    t.transcript = &indexes.at(row[mc]);
    tasks.push_back(std::move(t));
    task_meeting.push_back(row[mc]);
  }

  linkage::LinkOptions lopt;
  lopt.adjacent_year_fallback = cfg.adjacent_year_fallback;
  const auto results = linkage::link_batch(tasks, voters, nicknames, lopt, Exec::parallel);

  Stage stage(cfg, "link", opt);
  std::ostringstream out;
  csv::Writer w(out);
  w.row({"meeting", "speaker_id", "city", "year", "raw_name", "status", "first", "last", "last_is_initial", "voter_id",
         "lattice", "rank", "fallback_year", "tie_break_score", "ownership"});
  std::size_t matched = 0, rejected = 0, ambiguous = 0, fb_prev = 0, fb_next = 0;
  std::map<std::string, std::size_t> by_class;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& t = tasks[i];
    const auto speaker = t.speaker_key.substr(t.speaker_key.find('|') + 1);
    std::string status;
    if (!r.verified) {
      status = "rejected";
      ++rejected;
    } else if (r.result.matched()) {
      status = "matched";
      ++matched;
    } else if (r.result.ambiguous) {
      status = "ambiguous";
      ++ambiguous;
    } else {
      status = "unmatched";
    }
    std::string lattice, rank, voter_id, ownership, score;
    if (r.result.matched()) {
      lattice = std::string(linkage::to_string(r.result.priority->lattice));
      rank = std::to_string(r.result.priority->rank);
      voter_id = r.result.voter->voter_id;
      by_class[lattice + ":" + rank] += 1;
      if (r.result.fallback_year < 0) ++fb_prev;
      if (r.result.fallback_year > 0) ++fb_next;
      if (properties) ownership = std::string(linkage::to_string(properties->lookup(r.result.voter->address)));
      if (r.result.tie_break_score) score = csv::format_double(*r.result.tie_break_score);
    }
    const auto& c = r.verified ? *r.verified : r.result.candidate;
    w.row({task_meeting[i], speaker, t.city, std::to_string(t.year), t.raw_name, status, c.first, c.last,
           c.last_is_initial ? "1" : "0", voter_id, lattice, rank, std::to_string(r.result.fallback_year), score,
           ownership});
  }
  stage.write_text("matches.csv", out.str());

  json classes = json::object();
  for (const auto& [k, v] : by_class) classes[k] = {{"matches", v}, {"share", static_cast<double>(v) / static_cast<double>(matched)}};
  json report = {{"meta", meta(cfg, "link", false)},
                 {"speakers", tasks.size()},
                 {"matched", matched},
                 {"unmatched", tasks.size() - matched - rejected},
                 {"ambiguous", ambiguous},
                 {"rejected_not_in_transcript", rejected},
                 {"fallback_previous_year", fb_prev},
                 {"fallback_next_year", fb_next},
                 {"by_priority_class", classes},
                 {"adjacent_year_fallback", cfg.adjacent_year_fallback},
                 {"nicknames", nicknames.size()}};
  if (tasks.empty()) {
    report["match_rate"] = nullptr;
    report["match_rate_undefined"] = true;
  } else {
    report["match_rate"] = static_cast<double>(matched) / static_cast<double>(tasks.size());
    report["match_rate_undefined"] = false;
  }
  stage.write_json("summary.json", report);
  stage.commit();
  log << "link: " << matched << " of " << tasks.size() << " public speakers matched\n";
}

}  // namespace council::pipeline

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "council/common.hpp"

namespace council::transcript {

/// Whole seconds from meeting start, rendered as HH:MM:SS.
class TimeStamp {
 public:
  constexpr TimeStamp() = default;
  constexpr explicit TimeStamp(std::int64_t seconds) : seconds_(seconds) {}

  /// Parses "HH:MM:SS" (HH two or more digits, MM and SS in 00..59).
  static std::optional<TimeStamp> parse(std::string_view s);
  std::string to_string() const;

  constexpr std::int64_t seconds() const { return seconds_; }
  friend constexpr auto operator<=>(TimeStamp, TimeStamp) = default;

 private:
  std::int64_t seconds_ = 0;
};

struct SpeakerShare {
  std::string speaker_id;
  double fraction = 1.0;
};

struct DiarizedSegment {
  std::vector<SpeakerShare> shares;
  TimeStamp start;
  TimeStamp end;
  std::string text;

  std::int64_t length_seconds() const { return end.seconds() - start.seconds(); }
};

enum class Channel { youtube, other };

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  static std::optional<Date> parse(std::string_view s);  // YYYY-MM-DD
  std::string to_string() const;
  friend auto operator<=>(const Date&, const Date&) = default;
};

struct MeetingInfo {
  std::string city;
  Date date;
  Channel channel = Channel::youtube;
};

struct MeetingRecord {
  MeetingInfo info;
  std::vector<DiarizedSegment> segments;

  /// `<city>_<YYYY-MM-DD>`.
  std::string id() const;
  /// Maximum segment end minus first segment start.
  std::int64_t duration_seconds() const;
  /// Concatenated segment text, one segment per line.
  std::string full_text() const;
  /// Speaker ids in order of first appearance.
  std::vector<std::string> speakers() const;
};

struct ParseError {
  std::size_t line = 0;  // 1-based; 0 for whole-file errors
  std::string message;
};

struct ParseOutcome {
  std::optional<MeetingRecord> record;
  std::vector<ParseError> errors;
  Warnings warnings;

  bool ok() const { return record.has_value(); }
};

/// Parses a diarized transcript. Any error leaves `record` empty.
ParseOutcome parse_transcript(std::string_view raw, const MeetingInfo& info = {});
ParseOutcome parse_transcript(std::istream& in, const MeetingInfo& info = {});

/// Canonical header line for a segment, e.g. `SPEAKER_06 (00:01:23 - 00:02:45):`.
std::string render_header(const DiarizedSegment& seg);
/// Full transcript text in the parseable format.
std::string render_transcript(const MeetingRecord& meeting);

struct FilterBounds {
  std::int64_t min_seconds = 15 * 60;
  std::int64_t max_seconds = 15 * 60 * 60;
};

struct DroppedMeeting {
  MeetingRecord meeting;
  std::string reason;  // "too short" | "too long"
};

struct FilterResult {
  std::vector<MeetingRecord> kept;
  std::vector<DroppedMeeting> dropped;
};

/// Keeps meetings with min_seconds <= duration <= max_seconds (closed bounds).
FilterResult filter_meetings(std::vector<MeetingRecord> meetings, const FilterBounds& bounds = {});

/// Seconds attributed to a speaker: sum of segment length times share.
double speaking_time(const MeetingRecord& meeting, std::string_view speaker_id);
std::map<std::string, double> speaking_times(const MeetingRecord& meeting);

std::string_view channel_name(Channel c);
std::optional<Channel> parse_channel(std::string_view s);

}  // namespace council::transcript

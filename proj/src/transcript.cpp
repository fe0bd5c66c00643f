#include "council/transcript.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <set>
#include <sstream>

#include "council/text.hpp"

namespace council::transcript {

std::optional<TimeStamp> TimeStamp::parse(std::string_view s) {
  auto parts = text::split(s, ':');
  if (parts.size() != 3) return std::nullopt;
  auto all_digits = [](const std::string& p) {
    return !p.empty() && std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!all_digits(parts[0]) || parts[0].size() < 2) return std::nullopt;
  if (!all_digits(parts[1]) || parts[1].size() != 2) return std::nullopt;
  if (!all_digits(parts[2]) || parts[2].size() != 2) return std::nullopt;
  if (parts[0].size() > 6) return std::nullopt;
  std::int64_t h = std::stoll(parts[0]);
  std::int64_t m = std::stoll(parts[1]);
  std::int64_t sec = std::stoll(parts[2]);
  if (m > 59 || sec > 59) return std::nullopt;
  return TimeStamp(h * 3600 + m * 60 + sec);
}

std::string TimeStamp::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(seconds_ / 3600),
                static_cast<long long>((seconds_ / 60) % 60), static_cast<long long>(seconds_ % 60));
  return buf;
}

std::optional<Date> Date::parse(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  Date d;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return res.ec == std::errc() && res.ptr == s.data() + pos + len;
  };
  if (!num(0, 4, d.year) || !num(5, 2, d.month) || !num(8, 2, d.day)) return std::nullopt;
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::string_view channel_name(Channel c) { return c == Channel::youtube ? "youtube" : "other"; }

std::optional<Channel> parse_channel(std::string_view s) {
  if (s == "youtube") return Channel::youtube;
  if (s == "other") return Channel::other;
  return std::nullopt;
}

std::string MeetingRecord::id() const { return info.city + "_" + info.date.to_string(); }

std::int64_t MeetingRecord::duration_seconds() const {
  if (segments.empty()) return 0;
  std::int64_t last_end = 0;
  for (const auto& s : segments) last_end = std::max(last_end, s.end.seconds());
  return last_end - segments.front().start.seconds();
}

std::string MeetingRecord::full_text() const {
  std::string out;
  for (const auto& s : segments) {
    out.append(s.text);
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> MeetingRecord::speakers() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : segments) {
    for (const auto& sh : s.shares) {
      if (seen.insert(sh.speaker_id).second) out.push_back(sh.speaker_id);
    }
  }
  return out;
}

namespace {

constexpr double kShareTolerance = 1e-6;

// Cursor over one header line. Each matcher returns false on mismatch
// and leaves a description in `error`.
class HeaderScanner {
 public:
  explicit HeaderScanner(std::string_view line) : s_(line) {}

  bool at_end() const { return pos_ >= s_.size(); }
  std::string_view rest() const { return s_.substr(std::min(pos_, s_.size())); }

  bool literal(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) {
      return fail("expected '" + std::string(lit) + "'");
    }
    pos_ += lit.size();
    return true;
  }

  std::size_t spaces() {
    std::size_t n = 0;
    while (pos_ < s_.size() && s_[pos_] == ' ') {
      ++pos_;
      ++n;
    }
    return n;
  }

  bool one_or_more_spaces(std::string_view where) {
    if (spaces() == 0) return fail("expected space " + std::string(where));
    return true;
  }

  bool speaker(std::string& out) {
    std::size_t start = pos_;
    if (!literal("SPEAKER_")) return false;
    std::size_t digits = 0;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      ++pos_;
      ++digits;
    }
    if (digits == 0) return fail("speaker label needs digits after SPEAKER_");
    out = std::string(s_.substr(start, pos_ - start));
    return true;
  }

  bool timestamp(TimeStamp& out) {
    std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == ':')) ++pos_;
    auto ts = TimeStamp::parse(s_.substr(start, pos_ - start));
    if (!ts) return fail("malformed timestamp '" + std::string(s_.substr(start, pos_ - start)) + "'");
    out = *ts;
    return true;
  }

  bool fraction(double& out) {
    std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '.')) ++pos_;
    auto tok = s_.substr(start, pos_ - start);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      return fail("malformed share fraction '" + std::string(tok) + "'");
    }
    return true;
  }

  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

  const std::string& error() const { return error_; }

 private:
  bool fail(std::string msg) {
    if (error_.empty()) error_ = std::move(msg) + " at column " + std::to_string(pos_ + 1);
    return false;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::string error_;
};

struct Header {
  std::vector<SpeakerShare> shares;
  TimeStamp start;
  TimeStamp end;
  std::string inline_text;
};

bool looks_like_header(std::string_view line) {
  return line.rfind("SPEAKER_", 0) == 0 || line.rfind("{SPEAKER_", 0) == 0;
}

// Parses the "(TS - TS):" tail shared by both header forms.
bool parse_span(HeaderScanner& sc, Header& h) {
  if (!sc.literal("(")) return false;
  if (!sc.timestamp(h.start)) return false;
  if (!sc.one_or_more_spaces("before '-'")) return false;
  if (!sc.literal("-")) return false;
  if (!sc.one_or_more_spaces("after '-'")) return false;
  if (!sc.timestamp(h.end)) return false;
  if (!sc.literal(")")) return false;
  sc.spaces();
  if (!sc.literal(":")) return false;
  h.inline_text = std::string(sc.rest());
  return true;
}

std::optional<Header> parse_header(std::string_view line, std::string& error) {
  HeaderScanner sc(line);
  Header h;
  bool ok = false;
  if (sc.peek('{')) {
    ok = sc.literal("{");
    while (ok) {
      SpeakerShare share;
      ok = sc.speaker(share.speaker_id);
      if (!ok) break;
      sc.spaces();
      ok = sc.literal(":") && sc.one_or_more_spaces("after ':'") && sc.fraction(share.fraction);
      if (!ok) break;
      h.shares.push_back(std::move(share));
      if (sc.peek(',')) {
        ok = sc.literal(",") && sc.one_or_more_spaces("after ','");
        continue;
      }
      ok = sc.literal("}");
      break;
    }
    ok = ok && sc.one_or_more_spaces("before '('") && parse_span(sc, h);
  } else {
    SpeakerShare share;
    ok = sc.speaker(share.speaker_id) && sc.one_or_more_spaces("before '('") && parse_span(sc, h);
    share.fraction = 1.0;
    h.shares.push_back(std::move(share));
  }
  if (!ok) {
    error = "malformed header: " + sc.error();
    return std::nullopt;
  }
  return h;
}

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", f);
  double back = std::strtod(buf, nullptr);
  if (back == f) return buf;
  auto res = std::to_chars(buf, buf + sizeof buf, f);
  return std::string(buf, res.ptr);
}

}  // namespace

ParseOutcome parse_transcript(std::string_view raw, const MeetingInfo& info) {
  ParseOutcome out;
  if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
  if (text::trim(raw).empty()) {
    out.errors.push_back({0, "empty file"});
    return out;
  }

  MeetingRecord rec;
  rec.info = info;
  struct Open {
    std::size_t line;
    DiarizedSegment seg;
    std::vector<std::string> lines;
  };
  std::optional<Open> open;

  auto close = [&]() {
    if (!open) return;
    std::string body = text::join(open->lines, "\n");
    open->seg.text = text::trim(body);
    if (open->seg.text.empty()) {
      out.errors.push_back({open->line, "segment has empty text"});
    }
    rec.segments.push_back(std::move(open->seg));
    open.reset();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::optional<TimeStamp> prev_start;
  std::optional<TimeStamp> prev_end;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!looks_like_header(line)) {
      if (open) {
        open->lines.emplace_back(line);
      } else if (!text::trim(line).empty()) {
        out.errors.push_back({line_no, "text before first segment header"});
      }
      continue;
    }

    std::string err;
    auto header = parse_header(line, err);
    if (!header) {
      out.errors.push_back({line_no, err});
      // Keep appending following lines to the previous segment so that one
      // bad header yields one error.
      continue;
    }
    close();

    if (header->end <= header->start) {
      out.errors.push_back({line_no, "segment end " + header->end.to_string() + " is not after start " +
                                         header->start.to_string()});
    }
    double sum = 0.0;
    std::set<std::string> ids;
    for (const auto& sh : header->shares) {
      sum += sh.fraction;
      if (!(sh.fraction > 0.0 && sh.fraction <= 1.0)) {
        out.errors.push_back({line_no, "share fraction for " + sh.speaker_id + " outside (0, 1]"});
      }
      if (!ids.insert(sh.speaker_id).second) {
        out.errors.push_back({line_no, "speaker " + sh.speaker_id + " listed twice"});
      }
    }
    if (std::fabs(sum - 1.0) > kShareTolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", sum);
      out.errors.push_back({line_no, std::string("share fractions sum to ") + buf + ", expected 1"});
    }
    if (prev_start && header->start < *prev_start) {
      out.errors.push_back({line_no, "segment starts before the previous segment"});
    } else if (prev_end && header->start < *prev_end) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": segment overlaps the previous segment");
    }
    prev_start = header->start;
    prev_end = header->end;

    Open o;
    o.line = line_no;
    o.seg.shares = std::move(header->shares);
    o.seg.start = header->start;
    o.seg.end = header->end;
    o.lines.push_back(std::move(header->inline_text));
    open = std::move(o);
  }
  close();

  if (rec.segments.empty() && out.errors.empty()) {
    out.errors.push_back({0, "no segment headers found"});
  }
  if (out.errors.empty()) out.record = std::move(rec);
  return out;
}

ParseOutcome parse_transcript(std::istream& in, const MeetingInfo& info) {
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_transcript(raw, info);
}

std::string render_header(const DiarizedSegment& seg) {
  std::string out;
  if (seg.shares.size() == 1 && seg.shares.front().fraction == 1.0) {
    out = seg.shares.front().speaker_id;
  } else {
    out = "{";
    for (std::size_t i = 0; i < seg.shares.size(); ++i) {
      if (i) out += ", ";
      out += seg.shares[i].speaker_id + ": " + format_fraction(seg.shares[i].fraction);
    }
    out += "}";
  }
  out += " (" + seg.start.to_string() + " - " + seg.end.to_string() + "):";
  return out;
}

std::string render_transcript(const MeetingRecord& meeting) {
  std::string out;
  for (const auto& seg : meeting.segments) {
    out += render_header(seg);
    out += ' ';
    out += seg.text;
    out += '\n';
  }
  return out;
}

FilterResult filter_meetings(std::vector<MeetingRecord> meetings, const FilterBounds& bounds) {
  FilterResult out;
  for (auto& m : meetings) {
    auto d = m.duration_seconds();
    if (d < bounds.min_seconds) {
      out.dropped.push_back({std::move(m), "too short"});
    } else if (d > bounds.max_seconds) {
      out.dropped.push_back({std::move(m), "too long"});
    } else {
      out.kept.push_back(std::move(m));
    }
  }
  return out;
}

double speaking_time(const MeetingRecord& meeting, std::string_view speaker_id) {
  double total = 0.0;
  for (const auto& seg : meeting.segments) {
    for (const auto& sh : seg.shares) {
      if (sh.speaker_id == speaker_id) total += static_cast<double>(seg.length_seconds()) * sh.fraction;
    }
  }
  return total;
}

std::map<std::string, double> speaking_times(const MeetingRecord& meeting) {
  std::map<std::string, double> out;
  for (const auto& seg : meeting.segments) {
    for (const auto& sh : seg.shares) {
      out[sh.speaker_id] += static_cast<double>(seg.length_seconds()) * sh.fraction;
    }
  }
  return out;
}

}  // namespace council::transcript

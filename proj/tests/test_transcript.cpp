#include <doctest.h>

#include <sstream>

#include "council/transcript.hpp"
#include "support/grammar_suite.hpp"

using namespace council::transcript;

TEST_CASE("timestamps") {
  CHECK(TimeStamp::parse("00:01:23")->seconds() == 83);
  CHECK(TimeStamp::parse("123:00:05")->seconds() == 123 * 3600 + 5);
  CHECK_FALSE(TimeStamp::parse("1:00:00"));
  CHECK_FALSE(TimeStamp::parse("00:60:00"));
  CHECK_FALSE(TimeStamp::parse("00:00:60"));
  CHECK_FALSE(TimeStamp::parse("00:00"));
  CHECK(TimeStamp(3723).to_string() == "01:02:03");
  CHECK(TimeStamp(360000).to_string() == "100:00:00");
}

TEST_CASE("single and shared speaker segments") {
  const std::string raw =
      "SPEAKER_00 (00:00:00 - 00:01:00): Call to order.\n"
      "{SPEAKER_00: 0.6, SPEAKER_05: 0.4} (00:01:00 - 00:02:40): Thank you.\n"
      "More words on a second line.\n"
      "SPEAKER_05 (00:02:40 - 00:20:00): I move to approve.\n";
  const auto out = parse_transcript(raw, {"springfield", {2021, 3, 2}, Channel::youtube});
  REQUIRE(out.ok());
  const auto& m = *out.record;
  REQUIRE(m.segments.size() == 3);
  CHECK(m.segments[1].shares.size() == 2);
  CHECK(m.segments[1].shares[1].speaker_id == "SPEAKER_05");
  CHECK(m.segments[1].shares[1].fraction == doctest::Approx(0.4));
  CHECK(m.segments[1].text == "Thank you.\nMore words on a second line.");
  CHECK(m.id() == "springfield_2021-03-02");
  CHECK(m.duration_seconds() == 1200);
  CHECK(m.speakers() == std::vector<std::string>{"SPEAKER_00", "SPEAKER_05"});
  CHECK(speaking_time(m, "SPEAKER_00") == doctest::Approx(60 + 0.6 * 100));
  CHECK(speaking_time(m, "SPEAKER_05") == doctest::Approx(0.4 * 100 + 1040));
  CHECK(speaking_time(m, "SPEAKER_09") == 0.0);
  const auto all = speaking_times(m);
  CHECK(all.size() == 2);
}

TEST_CASE("errors carry line numbers and leave no record") {
  const auto out = parse_transcript("SPEAKER_00 (00:00:10 - 00:00:05): backwards\n");
  CHECK_FALSE(out.ok());
  REQUIRE(out.errors.size() == 1);
  CHECK(out.errors[0].line == 1);
  CHECK(parse_transcript("").errors.size() >= 1);
}

TEST_CASE("generated grammar suite") {
  for (const auto& gc : council::testing::grammar_suite()) {
    CAPTURE(gc.label);
    const auto out = parse_transcript(gc.raw);
    if (!gc.valid) {
      CHECK_FALSE(out.ok());
      REQUIRE(out.errors.size() == 1);
      CHECK(out.errors[0].line == gc.error_line);
      CHECK(out.errors[0].message.find(gc.error_fragment) != std::string::npos);
      continue;
    }
    REQUIRE(out.ok());
    REQUIRE(out.record->segments.size() == gc.segments.size());
    for (std::size_t i = 0; i < gc.segments.size(); ++i) {
      CHECK(out.record->segments[i].start.seconds() == gc.segments[i].start);
      CHECK(out.record->segments[i].end.seconds() == gc.segments[i].end);
      CHECK(out.record->segments[i].text == gc.segments[i].text);
    }
  }
}

TEST_CASE("render then parse is the identity on valid input") {
  for (const auto& gc : council::testing::grammar_suite(11)) {
    if (!gc.valid) continue;
    const auto first = parse_transcript(gc.raw);
    REQUIRE(first.ok());
    const auto text = render_transcript(*first.record);
    const auto again = parse_transcript(text);
    REQUIRE(again.ok());
    CHECK(render_transcript(*again.record) == text);
    CHECK(again.record->segments.size() == first.record->segments.size());
  }
}

TEST_CASE("stream input matches string input") {
  const std::string raw = "SPEAKER_01 (00:00:00 - 00:16:00): hello\n";
  std::istringstream in(raw);
  CHECK(parse_transcript(in).record->segments.size() == parse_transcript(raw).record->segments.size());
}

TEST_CASE("filter uses closed bounds") {
  auto meeting = [](std::int64_t secs) {
    MeetingRecord m;
    m.segments.push_back({{{"SPEAKER_00", 1.0}}, TimeStamp(100), TimeStamp(100 + secs), "x"});
    return m;
  };
  const auto r = filter_meetings({meeting(899), meeting(900), meeting(54000), meeting(54001)});
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].duration_seconds() == 900);
  CHECK(r.kept[1].duration_seconds() == 54000);
  REQUIRE(r.dropped.size() == 2);
  CHECK(r.dropped[0].reason == "too short");
  CHECK(r.dropped[1].reason == "too long");
}

TEST_CASE("dates and channels") {
  CHECK(Date::parse("2021-03-02")->to_string() == "2021-03-02");
  CHECK_FALSE(Date::parse("2021-13-02"));
  CHECK_FALSE(Date::parse("2021-3-2"));
  CHECK(parse_channel("youtube") == Channel::youtube);
  CHECK(channel_name(Channel::other) == "other");
}

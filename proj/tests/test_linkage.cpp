#include <doctest.h>

#include <random>

#include "council/linkage.hpp"
#include "support/linkage_oracle.hpp"

using namespace council;
using namespace council::linkage;

namespace {

VoterRecord voter(std::string id, std::string first, std::string middle, std::string last, std::string city = "springfield",
                  int year = 2021) {
  VoterRecord v;
  v.voter_id = std::move(id);
  v.first = std::move(first);
  v.middle = std::move(middle);
  v.last = std::move(last);
  v.city = std::move(city);
  v.year = year;
  return v;
}

NicknameTable small_nicknames() {
  NicknameTable t;
  t.add("Katherine", "Katie");
  t.add("Jonathan", "Jon");
  t.add("William", "Bill");
  return t;
}

}  // namespace

TEST_CASE("candidate parsing") {
  auto c = candidate_from_name("Maria Lopez");
  CHECK(c.first == "Maria");
  CHECK(c.last == "Lopez");
  CHECK_FALSE(c.last_is_initial);
  c = candidate_from_name("Olivia M.");
  CHECK(c.last == "M");
  CHECK(c.last_is_initial);
  c = candidate_from_name("Robert Smith Jr.");
  CHECK(c.last == "Smith");
  c = candidate_from_name("Prince");
  CHECK(c.first == "Prince");
  CHECK(c.last.empty());
}

TEST_CASE("nickname table is symmetric and case-insensitive") {
  const auto t = small_nicknames();
  CHECK(t.related("katie", "KATHERINE"));
  CHECK(t.related("Katherine", "Katie"));
  CHECK_FALSE(t.related("Katie", "Katie"));
  CHECK_FALSE(t.related("Katie", "Jon"));
  const auto bundled = NicknameTable::load_csv(std::string(COUNCILKIT_DATA_DIR) + "/nicknames.csv");
  CHECK(bundled.size() > 100);
  CHECK(bundled.related("john", "jack"));
  CHECK(bundled.related("pat", "patricia"));
}

TEST_CASE("transcript verification") {
  const TranscriptIndex idx("Hi, I'm Maria Lopez. Olivia M. speaking. Katie from Elm Street.");
  CHECK(idx.adjacent("olivia", "m"));
  CHECK_FALSE(idx.adjacent("m", "olivia"));
  CHECK(verify_in_transcript(candidate_from_name("Maria Lopez"), idx)->last == "Lopez");
  CHECK(verify_in_transcript(candidate_from_name("Olivia M."), idx));
  CHECK_FALSE(verify_in_transcript(candidate_from_name("Maria M."), idx));
  CHECK_FALSE(verify_in_transcript(candidate_from_name("Dana Reyes"), idx));
  const auto cut = verify_in_transcript(candidate_from_name("Katie Nguyen"), idx);
  REQUIRE(cut);
  CHECK(cut->last == "N");
  CHECK(cut->last_is_initial);
}

TEST_CASE("priority classes") {
  const auto nick = small_nicknames();
  const auto c = candidate_from_name("Katie Smith");
  CHECK(assign_priority(c, voter("1", "Katie", "", "Smith"), nick) == MatchPriority{Lattice::full_name, 1});
  CHECK(assign_priority(c, voter("2", "Katherine", "", "Smith"), nick) == MatchPriority{Lattice::full_name, 2});
  CHECK(assign_priority(c, voter("3", "Katie", "", "Smyth"), nick) == MatchPriority{Lattice::full_name, 3});
  CHECK(assign_priority(c, voter("4", "Ann", "Katie", "Smith"), nick) == MatchPriority{Lattice::full_name, 5});
  CHECK(assign_priority(c, voter("5", "Zed", "", "Smith"), nick) == MatchPriority{Lattice::full_name, 12});
  CHECK_FALSE(assign_priority(c, voter("6", "Katie", "", "Jones"), nick));
  const auto ci = candidate_from_name("Katie S.");
  CHECK(assign_priority(ci, voter("7", "Katie", "", "Sanchez"), nick) == MatchPriority{Lattice::first_plus_initial, 1});
  CHECK(assign_priority(ci, voter("8", "Katherine", "", "Soto"), nick) == MatchPriority{Lattice::first_plus_initial, 2});
  CHECK_FALSE(assign_priority(ci, voter("9", "Katie", "", "Jones"), nick));
}

TEST_CASE("best class wins, ties stay unmatched") {
  const auto nick = small_nicknames();
  const auto c = candidate_from_name("Katie Smith");
  VoterSlice s({voter("a", "Katie", "", "Smith"), voter("b", "Katherine", "", "Smith")});
  auto r = resolve_match(c, s, nick);
  REQUIRE(r.matched());
  CHECK(r.voter->voter_id == "a");
  CHECK(r.priority->rank == 1);

  VoterSlice twins({voter("a", "Katie", "", "Smith"), voter("b", "Katie", "", "Smith")});
  r = resolve_match(c, twins, nick);
  CHECK_FALSE(r.matched());
  CHECK(r.ambiguous);

  // Two rank-3 voters split by weighted Jaro-Winkler on the last name.
  VoterSlice phon({voter("a", "Katie", "", "Smyth"), voter("b", "Katie", "", "Smithe")});
  r = resolve_match(c, phon, nick);
  REQUIRE(r.matched());
  CHECK(r.tie_break_score.has_value());
  const double sa = weighted_jw("katie", "smith", "katie", "smyth");
  const double sb = weighted_jw("katie", "smith", "katie", "smithe");
  CHECK(r.voter->voter_id == (sa > sb ? "a" : "b"));

  // Last-name-only class never breaks ties.
  VoterSlice last_only({voter("a", "Zed", "", "Smith"), voter("b", "Yan", "", "Smith")});
  CHECK_FALSE(resolve_match(c, last_only, nick).matched());
}

TEST_CASE("weighted jaro-winkler") {
  CHECK(weighted_jw("a", "smith", "a", "smith") == doctest::Approx(1.0));
  CHECK(weighted_jw("martha", "x", "marhta", "x") == doctest::Approx(0.8 + 0.2 * 0.9611111111111111));
}

TEST_CASE("resolve_match agrees with the brute-force evaluator") {
  const auto nick = testing::oracle_nicknames();
  std::mt19937_64 rng(777);
  for (int i = 0; i < 400; ++i) {
    const auto lc = testing::generate_linkage_case(rng, i);
    const auto want = testing::oracle_resolve(lc.candidate, lc.voters, nick);
    const auto got = resolve_match(lc.candidate, VoterSlice(lc.voters), nick);
    CAPTURE(i);
    CHECK(got.matched() == want.matched);
    CHECK((got.priority ? got.priority->rank : 0) == want.rank);
    if (want.matched && got.matched()) CHECK(got.voter->voter_id == want.voter_id);
  }
}

TEST_CASE("adjacent-year fallback") {
  const auto nick = small_nicknames();
  VoterSlice prev({voter("p", "Katie", "", "Smith", "springfield", 2020)});
  VoterSlice next({voter("n", "Katie", "", "Smith", "springfield", 2022)});
  const auto c = candidate_from_name("Katie Smith", "springfield", 2021);
  auto r = adjacent_year_fallback(c, &prev, nullptr, nick);
  REQUIRE(r.matched());
  CHECK(r.fallback_year == -1);
  r = adjacent_year_fallback(c, nullptr, &next, nick);
  CHECK(r.fallback_year == 1);
  CHECK_FALSE(adjacent_year_fallback(c, nullptr, nullptr, nick).matched());
}

TEST_CASE("link_batch parallel equals serial") {
  std::vector<VoterRecord> vs;
  const char* firsts[] = {"Katie", "Jon", "Maria", "Bill", "Ann"};
  const char* lasts[] = {"Smith", "Lopez", "Nguyen", "Kim", "Smyth", "Lee"};
  for (int y = 2020; y <= 2022; ++y)
    for (auto f : firsts)
      for (auto l : lasts)
        if ((std::string(f).size() + std::string(l).size() + static_cast<std::size_t>(y)) % 3 != 0)
          vs.push_back(voter(std::string(f) + l + std::to_string(y), f, "", l, "springfield", y));
  const VoterFile file(vs);
  const auto nick = small_nicknames();
  std::vector<LinkTask> tasks;
  for (int i = 0; i < 300; ++i) {
    tasks.push_back({std::to_string(i), std::string(firsts[i % 5]) + " " + lasts[(i / 5) % 6], "Springfield",
                     2020 + i % 4, nullptr});
  }
  const auto a = link_batch(tasks, file, nick, {}, Exec::serial);
  const auto b = link_batch(tasks, file, nick, {}, Exec::parallel);
  REQUIRE(a.size() == b.size());
  std::size_t matched = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].speaker_key == b[i].speaker_key);
    CHECK(a[i].result.matched() == b[i].result.matched());
    if (a[i].result.matched()) {
      ++matched;
      CHECK(a[i].result.voter->voter_id == b[i].result.voter->voter_id);
      CHECK(a[i].result.fallback_year == b[i].result.fallback_year);
    }
  }
  CHECK(matched > 100);
}

TEST_CASE("address normalization and ownership") {
  CHECK(normalize_address("12 North Main Street, Apt. 4") == normalize_address("12 N MAIN ST #4"));
  CHECK(normalize_address("5 Bridge Lane") == "5 BRIDGE LN");
  CHECK(normalize_address("9 Elm Avenue Unit B") == "9 ELM AVE #B");
  PropertyTable t;
  t.add("5 Bridge Lane", false);
  t.add("12 N Main St", true);
  CHECK(match_address("5 bridge ln.", t) == Ownership::non_owner);
  CHECK(match_address("12 North Main Street", t) == Ownership::owner);
  CHECK(match_address("1 Nowhere Rd", t) == Ownership::unknown);
  CHECK(match_address("", t) == Ownership::unknown);
}

TEST_CASE("standardized difference") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
  // var = 5/3 each
  CHECK(standardized_difference(a, b) == doctest::Approx(-1.0 / std::sqrt(5.0 / 3.0)));
  const std::vector<double> c{1, 1}, d{1, 1};
  CHECK_THROWS_AS(standardized_difference(c, d), UndefinedError);
  const std::vector<double> one{1};
  CHECK_THROWS_AS(standardized_difference(one, a), UndefinedError);
}

TEST_CASE("voter file slices fold city names") {
  const VoterFile f({voter("1", "Ann", "", "Lee", "Springfield", 2021), voter("2", "Bo", "", "Kim", "springfield", 2021)});
  REQUIRE(f.slice("SPRINGFIELD", 2021));
  CHECK(f.slice("springfield", 2021)->size() == 2);
  CHECK(f.slice("springfield", 2022) == nullptr);
}

#include <doctest.h>

#include "council/prompt.hpp"

using namespace council;
using namespace council::prompt;

TEST_CASE("every bundled template loads and names its placeholders") {
  CHECK(all_prompts().size() == 6);
  for (auto n : all_prompts()) {
    CAPTURE(prompt_name(n));
    const auto tpl = load_template(n, COUNCILKIT_PROMPTS_DIR);
    CHECK(tpl.name == n);
    CHECK_FALSE(tpl.body.empty());
    CHECK_FALSE(tpl.placeholders().empty());
    CHECK(parse_prompt_name(prompt_name(n)) == n);
  }
  CHECK(load_template(PromptName::speaker_id, COUNCILKIT_PROMPTS_DIR).placeholders() ==
        std::vector<std::string>{"n_speakers", "speaker_list", "transcript"});
  CHECK_FALSE(parse_prompt_name("nope"));
  CHECK_THROWS(load_template(PromptName::stance, "/nonexistent"));
}

TEST_CASE("rendering") {
  PromptTemplate t{PromptName::stance, "Issue {issue}: {summary} {{literal}} {issue}"};
  CHECK(t.placeholders() == std::vector<std::string>{"issue", "summary"});
  const auto r = render_prompt(t, {{"issue", "Zoning"}, {"summary", "Upzone"}, {"extra", "x"}});
  CHECK(r.text == "Issue Zoning: Upzone {literal} Zoning");
  CHECK(r.warnings.size() == 1);
  CHECK_THROWS_AS(render_prompt(t, {{"issue", "Zoning"}}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt(t, {{"issue", "Zoning"}, {"summary", ""}}), std::invalid_argument);
  PromptTemplate stray{PromptName::stance, "a } b"};
  CHECK_THROWS_AS(render_prompt(stray, {}), std::invalid_argument);
  PromptTemplate joined{PromptName::stance, "one \\\ntwo {x}"};
  CHECK(render_prompt(joined, {{"x", "3"}}).text == "one two 3");
}

TEST_CASE("speaker identification context") {
  const auto parsed = transcript::parse_transcript(
      "SPEAKER_00 (00:00:00 - 00:10:00): Hello.\nSPEAKER_03 (00:10:00 - 00:20:00): Hi, I'm Ann.\n");
  const auto ctx = speaker_id_context(*parsed.record);
  CHECK(ctx.at("n_speakers") == "2");
  CHECK(ctx.at("speaker_list") == "SPEAKER_00\nSPEAKER_03");
  CHECK(ctx.at("transcript").find("I'm Ann.") != std::string::npos);
  const auto r = render_prompt(load_template(PromptName::speaker_id, COUNCILKIT_PROMPTS_DIR), ctx);
  CHECK(r.warnings.empty());
  CHECK(r.text.find("SPEAKER_03") != std::string::npos);
}

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "council/common.hpp"
#include "council/transcript.hpp"

namespace council::prompt {

enum class PromptName { speaker_id, issue_vote, topic_discovery, topic_unify, topic_classify, stance };

std::string_view prompt_name(PromptName n);
std::optional<PromptName> parse_prompt_name(std::string_view s);
const std::vector<PromptName>& all_prompts();

/// A plain-text template with `{placeholder}` fields. `{{` and `}}` render as
/// literal braces; a backslash immediately before a newline joins the lines.
struct PromptTemplate {
  PromptName name;
  std::string body;

  /// Distinct placeholder names in order of first use.
  std::vector<std::string> placeholders() const;
};

/// Reads `<dir>/<name>.txt`.
PromptTemplate load_template(PromptName name, const std::string& dir);

using Context = std::map<std::string, std::string>;

struct Rendered {
  std::string text;
  Warnings warnings;  // context keys the template never uses
};

/// Substitutes every placeholder. Throws std::invalid_argument when a
/// placeholder has no value or an empty value, or the body has a stray brace.
Rendered render_prompt(const PromptTemplate& tpl, const Context& context);

/// Context for the speaker-identification prompt: n_speakers, speaker_list
/// (one id per line) and transcript.
Context speaker_id_context(const transcript::MeetingRecord& meeting);

}  // namespace council::prompt

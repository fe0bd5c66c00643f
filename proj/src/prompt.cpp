#include "council/prompt.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace council::prompt {

namespace {

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Walks the body, calling on_text for literal runs and on_field for each
// placeholder name.
template <typename OnText, typename OnField>
void scan(std::string_view body, OnText on_text, OnField on_field) {
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '\\' && i + 1 < body.size() && body[i + 1] == '\n') {
      i += 2;
      continue;
    }
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        on_text("{");
        i += 2;
        continue;
      }
      std::size_t j = i + 1;
      if (j < body.size() && ident_start(body[j])) {
        while (j < body.size() && ident_char(body[j])) ++j;
        if (j < body.size() && body[j] == '}') {
          on_field(body.substr(i + 1, j - i - 1));
          i = j + 1;
          continue;
        }
      }
      throw std::invalid_argument("malformed placeholder at offset " + std::to_string(i));
    }
    if (c == '}') {
      if (i + 1 < body.size() && body[i + 1] == '}') {
        on_text("}");
        i += 2;
        continue;
      }
      throw std::invalid_argument("stray '}' at offset " + std::to_string(i));
    }
    std::size_t j = i;
    while (j < body.size() && body[j] != '{' && body[j] != '}' &&
           !(body[j] == '\\' && j + 1 < body.size() && body[j + 1] == '\n')) {
      ++j;
    }
    on_text(body.substr(i, j - i));
    i = j;
  }
}

}  // namespace

std::string_view prompt_name(PromptName n) {
  switch (n) {
    case PromptName::speaker_id: return "speaker_id";
    case PromptName::issue_vote: return "issue_vote";
    case PromptName::topic_discovery: return "topic_discovery";
    case PromptName::topic_unify: return "topic_unify";
    case PromptName::topic_classify: return "topic_classify";
    case PromptName::stance: return "stance";
  }
  return "";
}

const std::vector<PromptName>& all_prompts() {
  static const std::vector<PromptName> names = {PromptName::speaker_id,     PromptName::issue_vote,
                                                PromptName::topic_discovery, PromptName::topic_unify,
                                                PromptName::topic_classify,  PromptName::stance};
  return names;
}

std::optional<PromptName> parse_prompt_name(std::string_view s) {
  for (auto n : all_prompts()) {
    if (prompt_name(n) == s) return n;
  }
  return std::nullopt;
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  scan(
      body, [](std::string_view) {},
      [&](std::string_view f) {
        if (seen.emplace(f).second) out.emplace_back(f);
      });
  return out;
}

PromptTemplate load_template(PromptName name, const std::string& dir) {
  std::string path = dir + "/" + std::string(prompt_name(name)) + ".txt";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prompt template '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate{name, ss.str()};
}

Rendered render_prompt(const PromptTemplate& tpl, const Context& context) {
  Rendered out;
  std::set<std::string> used;
  scan(
      tpl.body, [&](std::string_view t) { out.text.append(t); },
      [&](std::string_view f) {
        auto it = context.find(std::string(f));
        if (it == context.end()) {
          throw std::invalid_argument("no value for placeholder {" + std::string(f) + "}");
        }
        if (it->second.empty()) {
          throw std::invalid_argument("empty value for placeholder {" + std::string(f) + "}");
        }
        out.text.append(it->second);
        used.emplace(f);
      });
  for (const auto& [k, v] : context) {
    if (!used.count(k)) out.warnings.push_back("context value '" + k + "' is not used by template " +
                                               std::string(prompt_name(tpl.name)));
  }
  return out;
}

Context speaker_id_context(const transcript::MeetingRecord& meeting) {
  auto ids = meeting.speakers();
  std::string list;
  for (const auto& id : ids) {
    list += id;
    list += '\n';
  }
  if (!list.empty()) list.pop_back();
  return Context{{"n_speakers", std::to_string(ids.size())},
                 {"speaker_list", list},
                 {"transcript", transcript::render_transcript(meeting)}};
}

}  // namespace council::prompt

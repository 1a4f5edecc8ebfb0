#include "qzlora/quiz/generate.hpp"

#include "qzlora/error.hpp"

#include <cctype>
#include <sstream>

namespace qzlora::quiz {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_emphasis(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c != '*' && c != '#' && c != '`') out.push_back(c);
  }
  return normalize_text(out);
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == prefix;
}

// "Question: x", "Question 3: x", "Q1. x", "3. x", "3) x", "1. Question: x" -> "x".
std::optional<std::string> match_question(const std::string& line) {
  std::size_t i = 0;
  bool keyword = false;
  if (starts_with_ci(line, "question")) {
    i = 8;
    keyword = true;
  } else if (line.size() > 1 && (line[0] == 'Q' || line[0] == 'q') &&
             (std::isdigit(static_cast<unsigned char>(line[1])) || line[1] == ':' || line[1] == '.')) {
    i = 1;
    keyword = true;
  }
  while (i < line.size() && line[i] == ' ') ++i;
  const std::size_t digits_begin = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  const bool numbered = i > digits_begin;
  if (!keyword && !numbered) return std::nullopt;
  if (i < line.size() && (line[i] == ':' || line[i] == '.' || line[i] == ')')) {
    ++i;
  } else if (!keyword) {
    return std::nullopt;
  }
  std::string rest = normalize_text(line.substr(i));
  // "1. Question: x"
  if (!keyword && starts_with_ci(rest, "question")) {
    if (auto inner = match_question(rest)) return inner;
  }
  return rest;
}

// "A. x", "A) x", "(A) x", "a: x", "- B. x" -> (letter index, "x").
std::optional<std::pair<int, std::string>> match_option(const std::string& line) {
  std::size_t i = 0;
  if (i < line.size() && line[i] == '-') {
    ++i;
    while (i < line.size() && line[i] == ' ') ++i;
  }
  const bool paren = i < line.size() && line[i] == '(';
  if (paren) ++i;
  if (i >= line.size()) return std::nullopt;
  const char letter = char(std::toupper(static_cast<unsigned char>(line[i])));
  if (letter < 'A' || letter > 'F') return std::nullopt;
  ++i;
  if (paren) {
    if (i >= line.size() || line[i] != ')') return std::nullopt;
    ++i;
  } else {
    if (i >= line.size() || (line[i] != '.' && line[i] != ')' && line[i] != ':')) return std::nullopt;
    ++i;
  }
  if (i < line.size() && line[i] != ' ') return std::nullopt;  // "A.B." is not an option line
  return std::make_pair(letter - 'A', normalize_text(line.substr(i)));
}

std::optional<std::string> match_keyed(const std::string& line, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    if (!starts_with_ci(line, key)) continue;
    std::size_t i = key.size();
    while (i < line.size() && line[i] == ' ') ++i;
    if (i < line.size() && (line[i] == ':' || line[i] == '-' || line[i] == '=')) {
      return normalize_text(line.substr(i + 1));
    }
  }
  return std::nullopt;
}

struct BlockBuilder {
  std::string stem;
  std::vector<std::string> options;
  std::optional<int> answer;
  bool answer_seen = false;
  std::optional<FocusAttribute> attribute;
  std::string problem;

  bool empty() const { return stem.empty() && options.empty() && !answer_seen; }

  ParsedBlock finish() const {
    ParsedBlock block;
    if (!problem.empty()) {
      block.problem = problem;
    } else if (stem.empty()) {
      block.problem = "missing stem";
    } else if (options.empty()) {
      block.problem = "no options";
    } else if (!answer) {
      block.problem = answer_seen ? "unreadable answer" : "missing answer";
    } else {
      block.question = Question{stem, options, *answer, attribute.value_or(FocusAttribute::Other)};
    }
    return block;
  }
};

std::optional<int> answer_letter(const std::string& text) {
  for (char c : text) {
    if (c == '(' || c == ' ' || c == '[') continue;
    const char up = char(std::toupper(static_cast<unsigned char>(c)));
    if (up >= 'A' && up <= 'F') return up - 'A';
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::vector<ParsedBlock> parse_quiz_payload(const std::string& text) {
  std::vector<ParsedBlock> blocks;
  BlockBuilder current;
  auto flush = [&] {
    if (!current.empty()) blocks.push_back(current.finish());
    current = BlockBuilder{};
  };

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = strip_emphasis(raw);
    if (line.empty()) {
      // A blank line between the stem and its options is tolerated.
      if (!current.options.empty() || current.answer_seen) flush();
      continue;
    }
    if (auto value = match_keyed(line, {"correct answer", "answer"})) {
      current.answer_seen = true;
      current.answer = answer_letter(*value);
      continue;
    }
    if (auto value = match_keyed(line, {"focus attribute", "attribute", "focus"})) {
      current.attribute = parse_focus_attribute(*value);
      continue;
    }
    if (auto option = match_option(line); option && !current.stem.empty()) {
      if (option->first != static_cast<int>(current.options.size())) {
        current.problem = "options out of sequence";
      }
      current.options.push_back(option->second);
      continue;
    }
    if (auto stem = match_question(line)) {
      flush();
      current.stem = *stem;
      continue;
    }
    if (!current.stem.empty() && current.options.empty()) {
      current.stem += " " + line;  // stem wrapped over several lines
    } else if (current.empty()) {
      current.stem = line;  // unprefixed stem
    }
  }
  flush();
  return blocks;
}

QuizPromptTemplates QuizPromptTemplates::defaults() {
  QuizPromptTemplates t;
  t.system_text =
      "You write multiple-choice quizzes that test whether a viewer can recognise a specific subject "
      "from a picture of it.";
  t.user_template =
      "Target subject: {topic_summary}\n"
      "\n"
      "Similar subjects that are easily confused with the target:\n"
      "{distractor_summaries}\n"
      "\n"
      "Write exactly {question_count} multiple-choice questions about visible characteristics of the "
      "target subject (texture, material, size, shape, color, pattern or typical context) that set it "
      "apart from the similar subjects. Each question must be answerable by someone looking at a "
      "photograph of the target.\n"
      "\n"
      "Use this format for every question, with a blank line between questions:\n"
      "Question: <question text>\n"
      "A. <option>\n"
      "B. <option>\n"
      "C. <option>\n"
      "D. <option>\n"
      "Answer: <letter>\n"
      "Attribute: <texture|material|size|shape|color|pattern|context|other>\n";
  return t;
}

QuizPromptTemplates QuizPromptTemplates::load(const fs::path& dir) {
  QuizPromptTemplates t;
  const fs::path system = dir / "quiz_system.txt";
  const fs::path user = dir / "quiz_user.txt";
  if (!fs::exists(system) || !fs::exists(user)) {
    throw Error(ErrorCode::ConfigError, "quiz templates missing in " + dir.string());
  }
  t.system_text = read_file(system);
  t.user_template = read_file(user);
  while (!t.system_text.empty() && t.system_text.back() == '\n') t.system_text.pop_back();
  return t;
}

std::string fill_template(std::string text, const std::vector<std::pair<std::string, std::string>>& values) {
  for (const auto& [name, value] : values) {
    const std::string key = "{" + name + "}";
    for (std::size_t pos = 0; (pos = text.find(key, pos)) != std::string::npos; pos += value.size()) {
      text.replace(pos, key.size(), value);
    }
  }
  return text;
}

std::string build_quiz_prompt(const QuizPromptTemplates& templates, const corpus::Topic& topic,
                              const std::vector<std::pair<std::string, std::string>>& distractor_summaries,
                              int question_count) {
  std::string distractors;
  for (const auto& [id, summary] : distractor_summaries) distractors += "- " + id + ": " + normalize_text(summary) + "\n";
  if (distractors.empty()) {
    distractors = "(none)";
  } else {
    distractors.pop_back();
  }
  return fill_template(templates.user_template, {{"topic_summary", normalize_text(topic.summary_sentence)},
                                                 {"distractor_summaries", distractors},
                                                 {"question_count", std::to_string(question_count)}});
}

Quiz generate_quiz(const corpus::Topic& topic,
                   const std::vector<std::pair<std::string, std::string>>& distractor_summaries,
                   int question_count, providers::TextCompletionProvider& provider, const QuizGenOptions& options) {
  if (question_count < 1 || question_count > kMaxQuestionCount) {
    throw Error(ErrorCode::InvalidQuiz, "question_count must be in 1.." + std::to_string(kMaxQuestionCount));
  }

  std::vector<std::optional<Question>> slots(static_cast<std::size_t>(question_count));
  auto missing = [&] {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i]) out.push_back(i);
    }
    return out;
  };

  for (int round = 0; round <= options.regeneration_rounds; ++round) {
    const std::vector<std::size_t> open = missing();
    if (open.empty()) break;

    providers::TextRequest request;
    request.model_id = options.model_id;
    request.system_text = options.templates.system_text;
    request.user_text = build_quiz_prompt(options.templates, topic, distractor_summaries, static_cast<int>(open.size()));
    if (round > 0) {
      request.user_text += "\n(Replacement round " + std::to_string(round) + ": earlier questions were rejected; write " +
                           std::to_string(open.size()) + " new ones.)\n";
    }
    request.max_tokens = options.max_tokens;
    request.temperature = options.temperature;

    providers::TextResponse response;
    try {
      response = with_retry(options.retry, [&] { return provider.complete(request); });
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProviderFailure) throw;
      throw Error(ErrorCode::ProviderFailure, e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ProviderFailure, e.what());
    }

    // Fill open slots in order with the valid questions of this round.
    std::size_t next_open = 0;
    for (const ParsedBlock& block : parse_quiz_payload(response.text)) {
      if (next_open == open.size()) break;
      const std::size_t slot = open[next_open++];
      if (block.question && validate_question(*block.question, static_cast<int>(slot)).empty()) {
        slots[slot] = block.question;
      }
    }
  }

  if (const auto open = missing(); !open.empty()) {
    throw Error(ErrorCode::ValidationExhausted,
                topic.topic_id + ": " + std::to_string(open.size()) + " of " + std::to_string(question_count) +
                    " questions still invalid after " + std::to_string(options.regeneration_rounds) + " rounds");
  }

  Quiz quiz;
  quiz.topic_id = topic.topic_id;
  quiz.generator_model_id = options.model_id;
  for (const auto& [id, summary] : distractor_summaries) quiz.distractors_used.push_back(id);
  for (auto& q : slots) quiz.questions.push_back(std::move(*q));
  quiz.created_at = options.clock.now();
  quiz.quiz_id = compute_quiz_id(quiz);
  if (options.store) options.store->save(quiz);
  return quiz;
}

}  // namespace qzlora::quiz

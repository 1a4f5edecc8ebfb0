#include "qzlora/quiz/quiz.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/digest.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace qzlora::quiz {

std::string_view to_string(FocusAttribute a) {
  switch (a) {
    case FocusAttribute::Texture: return "texture";
    case FocusAttribute::Material: return "material";
    case FocusAttribute::Size: return "size";
    case FocusAttribute::Shape: return "shape";
    case FocusAttribute::Color: return "color";
    case FocusAttribute::Pattern: return "pattern";
    case FocusAttribute::Context: return "context";
    case FocusAttribute::Other: return "other";
  }
  return "other";
}

FocusAttribute parse_focus_attribute(std::string_view text) {
  std::string lower;
  for (char c : normalize_text(text)) lower.push_back(char(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "colour") return FocusAttribute::Color;
  for (auto a : {FocusAttribute::Texture, FocusAttribute::Material, FocusAttribute::Size, FocusAttribute::Shape,
                 FocusAttribute::Color, FocusAttribute::Pattern, FocusAttribute::Context}) {
    if (lower == to_string(a)) return a;
  }
  return FocusAttribute::Other;
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::NoQuestions: return "NoQuestions";
    case Rule::EmptyStem: return "EmptyStem";
    case Rule::OptionCount: return "OptionCount";
    case Rule::EmptyOption: return "EmptyOption";
    case Rule::OutOfRangeCorrectIndex: return "OutOfRangeCorrectIndex";
    case Rule::DuplicateOptions: return "DuplicateOptions";
  }
  return "Unknown";
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

namespace {

std::string fold(std::string_view text) {
  std::string s = normalize_text(text);
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<Violation> validate_question(const Question& q, int index) {
  std::vector<Violation> out;
  if (normalize_text(q.stem).empty()) out.push_back({index, Rule::EmptyStem});
  if (q.options.size() < kMinOptions || q.options.size() > kMaxOptions) out.push_back({index, Rule::OptionCount});
  if (std::any_of(q.options.begin(), q.options.end(), [](const std::string& o) { return normalize_text(o).empty(); })) {
    out.push_back({index, Rule::EmptyOption});
  }
  if (q.correct_index < 0 || q.correct_index >= static_cast<int>(q.options.size())) {
    out.push_back({index, Rule::OutOfRangeCorrectIndex});
  }
  std::set<std::string> seen;
  for (const auto& o : q.options) {
    const std::string key = fold(o);
    if (!key.empty() && !seen.insert(key).second) {
      out.push_back({index, Rule::DuplicateOptions});
      break;
    }
  }
  return out;
}

std::vector<Violation> validate_quiz(const Quiz& quiz) {
  std::vector<Violation> out;
  if (quiz.questions.empty()) out.push_back({-1, Rule::NoQuestions});
  for (std::size_t i = 0; i < quiz.questions.size(); ++i) {
    auto v = validate_question(quiz.questions[i], static_cast<int>(i));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

namespace {

nlohmann::json content_json(const Quiz& quiz) {
  nlohmann::json questions = nlohmann::json::array();
  for (const auto& q : quiz.questions) {
    nlohmann::json options = nlohmann::json::array();
    for (const auto& o : q.options) options.push_back(normalize_text(o));
    questions.push_back({{"stem", normalize_text(q.stem)},
                         {"options", options},
                         {"correct_index", q.correct_index},
                         {"focus_attribute", to_string(q.focus_attribute)}});
  }
  return nlohmann::json{{"topic_id", quiz.topic_id},
                        {"generator_model_id", normalize_text(quiz.generator_model_id)},
                        {"distractors_used", quiz.distractors_used},
                        {"questions", questions}};
}

}  // namespace

std::string canonical_serialize(const Quiz& quiz) {
  if (auto violations = validate_quiz(quiz); !violations.empty()) {
    const auto& v = violations.front();
    throw Error(ErrorCode::InvalidQuiz,
                std::string(to_string(v.rule)) + " at question " + std::to_string(v.question_index));
  }
  return canonical_json(content_json(quiz));
}

std::string compute_quiz_id(const Quiz& quiz) { return sha256_hex(canonical_serialize(quiz)); }

nlohmann::json to_json(const Quiz& quiz) {
  nlohmann::json j = content_json(quiz);
  j["quiz_id"] = quiz.quiz_id;
  j["created_at"] = quiz.created_at;
  return j;
}

Quiz quiz_from_json(const nlohmann::json& j) {
  Quiz quiz;
  try {
    quiz.quiz_id = j.at("quiz_id").get<std::string>();
    quiz.topic_id = j.at("topic_id").get<std::string>();
    quiz.generator_model_id = j.at("generator_model_id").get<std::string>();
    quiz.distractors_used = j.at("distractors_used").get<std::vector<std::string>>();
    quiz.created_at = j.value("created_at", "");
    for (const auto& item : j.at("questions")) {
      Question q;
      q.stem = item.at("stem").get<std::string>();
      q.options = item.at("options").get<std::vector<std::string>>();
      q.correct_index = item.at("correct_index").get<int>();
      q.focus_attribute = parse_focus_attribute(item.at("focus_attribute").get<std::string>());
      quiz.questions.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidQuiz, e.what());
  }
  return quiz;
}

fs::path QuizStore::save(const Quiz& quiz) const {
  if (quiz.quiz_id != compute_quiz_id(quiz)) {
    throw Error(ErrorCode::InvalidQuiz, "quiz_id does not match content");
  }
  const fs::path path = path_for(quiz.topic_id, quiz.quiz_id);
  atomic_write(path, canonical_json(to_json(quiz)));
  return path;
}

Quiz QuizStore::load(const std::string& topic_id, const std::string& quiz_id) const {
  const fs::path path = path_for(topic_id, quiz_id);
  if (!fs::exists(path)) throw Error(ErrorCode::StoreError, "no quiz at " + path.string());
  Quiz quiz = quiz_from_json(read_json(path));
  if (quiz.quiz_id != compute_quiz_id(quiz)) throw Error(ErrorCode::InvalidQuiz, path.string() + " digest mismatch");
  return quiz;
}

}  // namespace qzlora::quiz

#include "qzlora/scoring/parse_answer.hpp"

#include <array>
#include <cctype>
#include <stdexcept>
#include <string>

namespace qzlora::scoring {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char upper(char c) { return char(std::toupper(static_cast<unsigned char>(c))); }
bool is_option_letter(char c) { return upper(c) >= 'A' && upper(c) <= 'F'; }

std::string clean(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c != '*' && c != '`') out.push_back(c);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<char> whole_reply_letter(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '(' || s.front() == '[' || s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
  while (!s.empty() && std::string_view(")].:!\"'").find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  if (s.size() == 1 && is_option_letter(s[0])) return upper(s[0]);
  return std::nullopt;
}

bool punct_boundary(std::string_view s, std::size_t at) {
  return at >= s.size() || std::string_view(".,;:)!]").find(s[at]) != std::string_view::npos;
}

// Letter right after position `i` (skipping "is", ":", "=", "-", "would be"...).
std::optional<char> letter_after_key(std::string_view s, std::size_t i) {
  auto skip_spaces = [&] {
    while (i < s.size() && is_space(s[i])) ++i;
  };
  skip_spaces();
  for (std::string_view filler : {"would be", "is", "was", "="}) {
    if (s.substr(i, filler.size()) == filler && (i + filler.size() >= s.size() || !is_alnum(s[i + filler.size()]))) {
      i += filler.size();
      break;
    }
  }
  skip_spaces();
  while (i < s.size() && (s[i] == ':' || s[i] == '-')) ++i;
  skip_spaces();
  const bool paren = i < s.size() && (s[i] == '(' || s[i] == '[');
  if (paren) ++i;
  if (i >= s.size() || !is_option_letter(s[i])) return std::nullopt;
  const char letter = s[i];
  const std::size_t after = i + 1;
  if (after < s.size() && (is_alnum(s[after]) || s[after] == '\'')) return std::nullopt;
  if (paren) {
    if (after < s.size() && (s[after] == ')' || s[after] == ']')) return upper(letter);
    return std::nullopt;
  }
  // Lowercase "a" after a key is usually the article ("the answer is a pastry").
  if (letter != 'a' || punct_boundary(s, after)) return upper(letter);
  return std::nullopt;
}

std::optional<char> keyed_letter(std::string_view original) {
  std::string lowered(original);
  for (char& c : lowered) c = char(std::tolower(static_cast<unsigned char>(c)));
  static constexpr std::array<std::string_view, 3> kKeys{"answer", "option", "choice"};
  std::size_t best = std::string::npos;
  std::optional<char> result;
  for (auto key : kKeys) {
    for (std::size_t pos = lowered.find(key); pos != std::string::npos; pos = lowered.find(key, pos + 1)) {
      if (pos >= best) break;
      if (pos > 0 && is_alnum(lowered[pos - 1])) continue;
      std::size_t end = pos + key.size();
      if (end < lowered.size() && lowered[end] == 's') ++end;  // "options", "answers"
      if (end < lowered.size() && is_alnum(lowered[end])) continue;
      // Matching uses the original casing so the lowercase-article rule holds.
      if (auto letter = letter_after_key(original, end)) {
        best = pos;
        result = letter;
        break;
      }
    }
  }
  return result;
}

std::optional<char> leading_letter(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && is_option_letter(s[0]) && std::string_view(".):,").find(s[1]) != std::string_view::npos) {
    return upper(s[0]);
  }
  return std::nullopt;
}

std::optional<char> parenthesized_letter(std::string_view s) {
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if (s[i] == '(' && is_option_letter(s[i + 1]) && s[i + 2] == ')') return upper(s[i + 1]);
  }
  return std::nullopt;
}

std::optional<char> standalone_capital(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c < 'A' || c > 'F') continue;
    if (i > 0 && (is_alnum(s[i - 1]) || s[i - 1] == '\'' || s[i - 1] == '-')) continue;
    if (i + 1 < s.size() && (is_alnum(s[i + 1]) || s[i + 1] == '\'' || s[i + 1] == '-')) continue;
    // "A bird", "A quick look": the article, not an option.
    if (c == 'A' && i + 2 < s.size() && s[i + 1] == ' ' && std::islower(static_cast<unsigned char>(s[i + 2]))) continue;
    return c;
  }
  return std::nullopt;
}

}  // namespace

AnswerChoice parse_answer(std::string_view raw_text, int option_count) {
  if (option_count < 2 || option_count > 6) throw std::invalid_argument("option_count must be in 2..6");
  const std::string text = clean(raw_text);

  std::optional<char> letter = whole_reply_letter(text);
  if (!letter) letter = keyed_letter(text);
  if (!letter) letter = leading_letter(text);
  if (!letter) letter = parenthesized_letter(text);
  if (!letter) letter = standalone_capital(text);
  if (!letter) return std::nullopt;

  const int index = *letter - 'A';
  if (index >= option_count) return std::nullopt;
  return index;
}

}  // namespace qzlora::scoring

#pragma once

#include <optional>
#include <string_view>

namespace qzlora::scoring {

/// Chosen option index, or nullopt for an unparseable reply.
using AnswerChoice = std::optional<int>;

/// Extracts the option letter a model chose. Rules, first match decides:
///
///   1. the whole reply is a letter, possibly wrapped: "B", "(c)", "D."
///   2. a keyed letter: "answer: B", "the correct option is (c)", "choice D"
///      (a lowercase "a" needs parentheses or trailing punctuation)
///   3. a leading letter with a delimiter: "B. The wings...", "c) because"
///   4. the first parenthesized letter: "... so (b) fits best"
///   5. the first standalone capital A-F, skipping the article "A word"
///
/// A decisive letter outside [0, option_count) is Unparseable, as is a reply
/// that matches none of the rules. option_count must be in 2..6.
AnswerChoice parse_answer(std::string_view raw_text, int option_count);

}  // namespace qzlora::scoring

#pragma once

#include "qzlora/corpus/topic.hpp"
#include "qzlora/selection/selection.hpp"

#include <map>
#include <string>
#include <vector>

namespace qzlora::gen {

inline constexpr std::string_view kPositivePrefix = "Generate the image of ";

struct PromptPair {
  std::string positive;
  std::string negative;
  selection::Style style = selection::Style::Realistic;

  bool operator==(const PromptPair&) const = default;
};

/// Shared style parts plus an optional per-topic detail. Loaded from an INI
/// file shaped like
///
///   [realistic]
///   suffix = ...                 ; fallback for every category
///   suffix_FoodAndDrink = ...    ; per-category override
///   negative = term, term, ...
///   [realistic_detail]
///   gujia = several gujhias arranged neatly on a red plate
///
/// and the same for [illustration] / [illustration_detail].
struct TemplateSet {
  struct StyleParts {
    std::string default_suffix;
    std::map<corpus::Category, std::string> category_suffix;
    std::vector<std::string> negative_terms;
    std::map<std::string, std::string> topic_detail;  // topic_id -> detail
  };

  std::map<selection::Style, StyleParts> styles;

  static TemplateSet load(const fs::path& ini_path);
  static TemplateSet parse(const std::string& ini_text);
};

/// positive = prefix + summary (final period dropped) + ", " + style suffix
/// [+ ", " + topic detail] + "."; negative = the style's terms joined by ", ".
/// Throws MissingTemplate when the suffix or the negative list is empty.
PromptPair build_prompts(const corpus::Topic& topic, selection::Style style, const TemplateSet& templates);

}  // namespace qzlora::gen

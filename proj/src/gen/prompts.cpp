#include "qzlora/gen/prompts.hpp"

#include "qzlora/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <sstream>

namespace qzlora::gen {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split_terms(const std::string& list) {
  std::vector<std::string> terms;
  std::istringstream in(list);
  std::string term;
  while (std::getline(in, term, ',')) {
    term = trim(term);
    if (!term.empty()) terms.push_back(term);
  }
  return terms;
}

}  // namespace

TemplateSet TemplateSet::parse(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::MissingTemplate, std::string("prompt templates: ") + e.what());
  }
  TemplateSet set;
  for (selection::Style style : {selection::Style::Realistic, selection::Style::Illustration}) {
    const std::string name(selection::to_string(style));
    StyleParts parts;
    if (const auto section = tree.get_child_optional(pt::ptree::path_type(name, '\0'))) {
      for (const auto& [key, node] : *section) {
        const std::string value = trim(node.data());
        if (key == "suffix") {
          parts.default_suffix = value;
        } else if (key == "negative") {
          parts.negative_terms = split_terms(value);
        } else if (key.rfind("suffix_", 0) == 0) {
          try {
            parts.category_suffix[corpus::parse_category(key.substr(7))] = value;
          } catch (const Error&) {
            throw Error(ErrorCode::MissingTemplate, "unknown category in [" + name + "] " + key);
          }
        }
      }
    }
    if (const auto details = tree.get_child_optional(pt::ptree::path_type(name + "_detail", '\0'))) {
      for (const auto& [key, node] : *details) parts.topic_detail[key] = trim(node.data());
    }
    set.styles[style] = std::move(parts);
  }
  return set;
}

TemplateSet TemplateSet::load(const fs::path& ini_path) {
  if (!fs::exists(ini_path)) throw Error(ErrorCode::MissingTemplate, ini_path.string() + " not found");
  return parse(read_file(ini_path));
}

PromptPair build_prompts(const corpus::Topic& topic, selection::Style style, const TemplateSet& templates) {
  const std::string style_name(selection::to_string(style));
  const auto it = templates.styles.find(style);
  if (it == templates.styles.end()) throw Error(ErrorCode::MissingTemplate, "no templates for " + style_name);
  const TemplateSet::StyleParts& parts = it->second;

  std::string suffix = parts.default_suffix;
  if (const auto c = parts.category_suffix.find(topic.category); c != parts.category_suffix.end()) {
    suffix = c->second;
  }
  if (suffix.empty()) throw Error(ErrorCode::MissingTemplate, "empty " + style_name + " suffix");
  if (parts.negative_terms.empty()) throw Error(ErrorCode::MissingTemplate, "empty " + style_name + " negative list");

  std::string summary = trim(topic.summary_sentence);
  if (!summary.empty() && summary.back() == '.') summary.pop_back();

  PromptPair pair;
  pair.style = style;
  pair.positive = std::string(kPositivePrefix) + summary + ", " + suffix;
  if (const auto d = parts.topic_detail.find(topic.topic_id); d != parts.topic_detail.end() && !d->second.empty()) {
    pair.positive += ", " + d->second;
  }
  pair.positive += ".";
  for (std::size_t i = 0; i < parts.negative_terms.size(); ++i) {
    if (i) pair.negative += ", ";
    pair.negative += parts.negative_terms[i];
  }
  return pair;
}

}  // namespace qzlora::gen

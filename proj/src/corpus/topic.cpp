#include "qzlora/corpus/topic.hpp"

#include "qzlora/error.hpp"

#include <algorithm>

namespace qzlora::corpus {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Biology: return "Biology";
    case Category::Architecture: return "Architecture";
    case Category::FoodAndDrink: return "FoodAndDrink";
    case Category::Art: return "Art";
  }
  return "Biology";
}

Category parse_category(std::string_view text) {
  for (Category c : {Category::Biology, Category::Architecture, Category::FoodAndDrink, Category::Art}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::InvalidTopic, "unknown category '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const Topic& t) {
  j = nlohmann::json{{"topic_id", t.topic_id},
                     {"wiki_url", t.wiki_url},
                     {"summary_sentence", t.summary_sentence},
                     {"category", to_string(t.category)},
                     {"monthly_views", t.monthly_views},
                     {"distractor_ids", t.distractor_ids}};
}

void from_json(const nlohmann::json& j, Topic& t) {
  try {
    t.topic_id = j.at("topic_id").get<std::string>();
    t.wiki_url = j.value("wiki_url", "");
    t.summary_sentence = j.at("summary_sentence").get<std::string>();
    t.category = parse_category(j.at("category").get<std::string>());
    t.monthly_views = j.value("monthly_views", std::uint64_t{0});
    t.distractor_ids = j.value("distractor_ids", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidTopic, e.what());
  }
}

bool is_slug(std::string_view text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

std::vector<std::string> topic_violations(const Topic& topic) {
  std::vector<std::string> out;
  if (!is_slug(topic.topic_id)) out.push_back("topic_id '" + topic.topic_id + "' is not a slug");
  if (topic.summary_sentence.find_first_not_of(" \t\r\n") == std::string::npos) {
    out.push_back("summary_sentence is empty");
  }
  if (topic.distractor_ids.size() > 5) out.push_back("more than 5 distractor_ids");
  for (const auto& d : topic.distractor_ids) {
    if (d == topic.topic_id) out.push_back("distractor_ids contains the topic itself");
    if (!is_slug(d)) out.push_back("distractor id '" + d + "' is not a slug");
  }
  return out;
}

TopicRegistry::TopicRegistry(fs::path path) : path_(std::move(path)) {}

std::vector<Topic> TopicRegistry::load() const {
  if (!fs::exists(path_)) return {};
  const nlohmann::json j = read_json(path_);
  std::vector<Topic> topics;
  for (const auto& item : j.at("topics")) topics.push_back(item.get<Topic>());
  return topics;
}

Topic TopicRegistry::register_topic(const Topic& topic) {
  if (auto violations = topic_violations(topic); !violations.empty()) {
    std::string msg = topic.topic_id + ":";
    for (const auto& v : violations) msg += " " + v + ";";
    throw Error(ErrorCode::InvalidTopic, msg);
  }
  std::lock_guard lock(mutex_);
  std::vector<Topic> topics = load();
  auto it = std::find_if(topics.begin(), topics.end(),
                         [&](const Topic& t) { return t.topic_id == topic.topic_id; });
  if (it != topics.end()) {
    if (*it == topic) return *it;
    throw Error(ErrorCode::DuplicateTopic, topic.topic_id + " already registered with a different payload");
  }
  topics.push_back(topic);
  std::sort(topics.begin(), topics.end(),
            [](const Topic& a, const Topic& b) { return a.topic_id < b.topic_id; });
  atomic_write(path_, pretty_json(nlohmann::json{{"topics", topics}}));
  return topic;
}

std::optional<Topic> TopicRegistry::find(const std::string& topic_id) const {
  std::lock_guard lock(mutex_);
  for (auto& t : load()) {
    if (t.topic_id == topic_id) return t;
  }
  return std::nullopt;
}

Topic TopicRegistry::get(const std::string& topic_id) const {
  if (auto t = find(topic_id)) return *t;
  throw Error(ErrorCode::UnknownTopic, topic_id);
}

std::vector<Topic> TopicRegistry::all() const {
  std::lock_guard lock(mutex_);
  auto topics = load();
  std::sort(topics.begin(), topics.end(),
            [](const Topic& a, const Topic& b) { return a.topic_id < b.topic_id; });
  return topics;
}

Topic register_topic(const fs::path& registry_path, const Topic& topic) {
  return TopicRegistry(registry_path).register_topic(topic);
}

std::string_view to_string(IneligibleReason r) {
  return r == IneligibleReason::TooPopular ? "TooPopular" : "TooFewImages";
}

EligibilityVerdict check_eligibility(const Topic& topic, std::uint64_t available_image_count) {
  EligibilityVerdict verdict;
  if (topic.monthly_views >= kMonthlyViewsLimit) verdict.reasons.push_back(IneligibleReason::TooPopular);
  if (available_image_count < kMinAvailableImages) verdict.reasons.push_back(IneligibleReason::TooFewImages);
  return verdict;
}

}  // namespace qzlora::corpus

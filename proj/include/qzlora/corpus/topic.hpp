#pragma once

#include "qzlora/util/fs.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::corpus {

enum class Category { Biology, Architecture, FoodAndDrink, Art };

std::string_view to_string(Category c);
Category parse_category(std::string_view text);

/// A target concept. The summary sentence seeds both quiz generation and the
/// generation prompts.
struct Topic {
  std::string topic_id;
  std::string wiki_url;
  std::string summary_sentence;
  Category category = Category::Biology;
  std::uint64_t monthly_views = 0;
  std::vector<std::string> distractor_ids;

  bool operator==(const Topic&) const = default;
};

void to_json(nlohmann::json& j, const Topic& t);
void from_json(const nlohmann::json& j, Topic& t);

/// Human-readable descriptions of every invariant the topic breaks; empty
/// when valid.
std::vector<std::string> topic_violations(const Topic& topic);

bool is_slug(std::string_view text);

/// JSON-file backed set of topics keyed by topic_id.
class TopicRegistry {
 public:
  explicit TopicRegistry(fs::path path);

  /// Persists `topic`. Identical re-registration returns the stored record.
  /// Throws InvalidTopic or DuplicateTopic.
  Topic register_topic(const Topic& topic);

  std::optional<Topic> find(const std::string& topic_id) const;
  /// Throws UnknownTopic.
  Topic get(const std::string& topic_id) const;
  /// Sorted by topic_id.
  std::vector<Topic> all() const;

  const fs::path& path() const { return path_; }

 private:
  std::vector<Topic> load() const;

  fs::path path_;
  mutable std::mutex mutex_;
};

Topic register_topic(const fs::path& registry_path, const Topic& topic);

// Topics must be active but not among the most popular, and need enough
// public images to sample from.
inline constexpr std::uint64_t kMonthlyViewsLimit = 6000;  // eligible iff views < limit
inline constexpr std::uint64_t kMinAvailableImages = 30;   // eligible iff count >= min

enum class IneligibleReason { TooPopular, TooFewImages };

std::string_view to_string(IneligibleReason r);

struct EligibilityVerdict {
  std::vector<IneligibleReason> reasons;

  bool eligible() const { return reasons.empty(); }
};

EligibilityVerdict check_eligibility(const Topic& topic, std::uint64_t available_image_count);

}  // namespace qzlora::corpus

#include "qzlora/selection/selection.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/rng.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <stdexcept>

namespace qzlora::selection {

std::string_view to_string(Style s) { return s == Style::Realistic ? "realistic" : "illustration"; }

Style parse_style(std::string_view text) {
  if (text == "realistic") return Style::Realistic;
  if (text == "illustration") return Style::Illustration;
  throw Error(ErrorCode::InvalidCondition, "unknown style '" + std::string(text) + "'");
}

Condition Condition::make(ConditionKind kind, int k, Style style) {
  if (k < 0 || (kind == ConditionKind::NoLoRA) != (k == 0)) {
    throw Error(ErrorCode::InvalidCondition, "k=" + std::to_string(k) + " does not fit the condition kind");
  }
  return Condition{kind, k, style};
}

namespace {

constexpr std::pair<ConditionKind, std::string_view> kKindPrefixes[] = {
    {ConditionKind::LoRARandomK, "lora-random-"},
    {ConditionKind::QZLoRATopK, "qzlora-top-"},
    {ConditionKind::RealRandomK, "real-random-"},
    {ConditionKind::RealTopK, "real-top-"},
};

}  // namespace

Condition Condition::parse(std::string_view label) {
  const auto slash = label.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorCode::InvalidCondition, "label '" + std::string(label) + "' lacks a /style suffix");
  }
  const std::string_view head = label.substr(0, slash);
  const Style style = parse_style(label.substr(slash + 1));
  if (head == "no-lora") return make(ConditionKind::NoLoRA, 0, style);
  for (const auto& [kind, prefix] : kKindPrefixes) {
    if (head.substr(0, prefix.size()) != prefix) continue;
    const std::string_view digits = head.substr(prefix.size());
    int k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() ||
        (digits.size() > 1 && digits[0] == '0')) {
      break;
    }
    return make(kind, k, style);
  }
  throw Error(ErrorCode::InvalidCondition, "unparseable condition label '" + std::string(label) + "'");
}

std::string Condition::selection_key() const {
  if (kind == ConditionKind::NoLoRA) return "no-lora";
  for (const auto& [k_kind, prefix] : kKindPrefixes) {
    if (k_kind == kind) return std::string(prefix) + std::to_string(k);
  }
  return "unknown";
}

std::string Condition::label() const { return selection_key() + "/" + std::string(to_string(style)); }

std::string Condition::file_stem() const { return selection_key() + "." + std::string(to_string(style)); }

std::vector<RankedSubject> rank(const std::vector<scoring::ScoreRecord>& records) {
  std::vector<RankedSubject> ranking;
  ranking.reserve(records.size());
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.quiz_id != records.front().quiz_id || r.vlm_model_id != records.front().vlm_model_id) {
      throw Error(ErrorCode::MixedQuiz, r.subject_id + " was scored with a different quiz or model");
    }
    if (!seen.insert(r.subject_id).second) throw Error(ErrorCode::MixedQuiz, "subject " + r.subject_id + " repeated");
    ranking.push_back({r.subject_id, r.accuracy});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedSubject& a, const RankedSubject& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.subject_id < b.subject_id;
  });
  return ranking;
}

SelectionSet select_top_k(const std::vector<RankedSubject>& ranking, int k) {
  if (k < 1) throw std::invalid_argument("select_top_k: k must be at least 1");
  if (ranking.empty()) throw Error(ErrorCode::EmptyRanking, "nothing to select from");
  SelectionSet s;
  s.condition = Condition::make(ConditionKind::QZLoRATopK, k);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.size());
  for (std::size_t i = 0; i < n; ++i) s.image_ids.push_back(ranking[i].subject_id);
  s.short_set = ranking.size() < static_cast<std::size_t>(k);
  return s;
}

SelectionSet select_random_k(const std::vector<corpus::CandidateImage>& corpus, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("select_random_k: k must be at least 1");
  std::vector<const corpus::CandidateImage*> pool;
  for (const auto& c : corpus) {
    if (!c.corrupt) pool.push_back(&c);
  }
  if (pool.empty()) throw Error(ErrorCode::EmptyCorpus, "no usable candidates");
  std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->fetch_index < b->fetch_index; });

  CounterRng rng(seed);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }

  SelectionSet s;
  s.condition = Condition::make(ConditionKind::LoRARandomK, k);
  s.seed = seed;
  s.short_set = pool.size() < static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < take; ++i) s.image_ids.push_back(pool[i]->image_id);
  return s;
}

std::uint64_t derive_selection_seed(std::uint64_t base_seed, const std::string& topic_id,
                                    const std::string& selection_key) {
  return sha256_u64(std::to_string(base_seed) + "|" + topic_id + "|" + selection_key);
}

nlohmann::json to_json(const SelectionSet& s) {
  nlohmann::json j{{"topic_id", s.topic_id},
                   {"condition", s.condition.label()},
                   {"image_ids", s.image_ids},
                   {"short", s.short_set}};
  j["seed"] = s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr);
  j["source_quiz_id"] = s.source_quiz_id ? nlohmann::json(*s.source_quiz_id) : nlohmann::json(nullptr);
  return j;
}

SelectionSet selection_from_json(const nlohmann::json& j) {
  SelectionSet s;
  s.topic_id = j.at("topic_id").get<std::string>();
  s.condition = Condition::parse(j.at("condition").get<std::string>());
  s.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  s.short_set = j.value("short", false);
  if (j.contains("seed") && !j["seed"].is_null()) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("source_quiz_id") && !j["source_quiz_id"].is_null()) {
    s.source_quiz_id = j["source_quiz_id"].get<std::string>();
  }
  return s;
}

fs::path SelectionStore::save(const SelectionSet& s) const {
  const fs::path path = path_for(s.topic_id, s.condition);
  atomic_write(path, pretty_json(to_json(s)));
  return path;
}

SelectionSet SelectionStore::load(const std::string& topic_id, const Condition& c) const {
  const fs::path path = path_for(topic_id, c);
  if (!fs::exists(path)) throw Error(ErrorCode::StoreError, "no selection at " + path.string());
  return selection_from_json(read_json(path));
}

}  // namespace qzlora::selection

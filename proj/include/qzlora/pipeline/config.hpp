#pragma once

#include "qzlora/selection/selection.hpp"
#include "qzlora/train/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qzlora::pipeline {

struct ProviderConfig {
  std::string kind = "mock";  // mock | openai | replay
  std::string endpoint;       // openai: chat-completions URL
  std::string model_id = "gpt-4o-2024-11-20";
  fs::path fixtures;  // mock: fixture directory; replay: call log file
  std::string api_key;  // from the environment only
};

/// Everything a run needs. Relative paths in the file are resolved against
/// the directory holding the file; API keys come from TEXT_API_KEY and
/// VISION_API_KEY.
struct PipelineConfig {
  fs::path config_dir;

  // [paths]
  fs::path registry;
  fs::path source;     // local image source root
  fs::path work;       // every store lives below this
  fs::path templates;  // quiz_*.txt and vlm_*.txt; empty: built-in defaults
  fs::path prompts;    // generation prompt INI

  // [ingest]
  std::string ingest_source = "local";  // local | commons
  std::size_t ingest_cap = 55;
  std::size_t ingest_parallelism = 4;
  std::uint32_t min_width = 256;
  std::uint32_t min_height = 256;
  bool enforce_eligibility = true;

  ProviderConfig text;
  ProviderConfig vision;

  // [image_backend]
  std::string backend_kind = "stub";  // stub | http
  std::string backend_endpoint;
  std::string backend_model_tag = "sd-1.5";
  int steps = 30;
  double cfg = 7.0;
  int width = 512;
  int height = 512;
  double lora_weight = 1.0;
  std::uint32_t stub_size = 64;

  // [trainer]
  std::string trainer_command;  // "{config_dir}" is expanded at load time
  std::size_t trainer_jobs = 1;  // concurrent training runs
  train::ManifestOverrides manifest_overrides;

  // [pipeline]
  std::vector<std::string> topics;  // empty: every registered topic
  int question_count = 10;
  std::vector<int> ks{2, 5, 10, 12, 15};
  std::vector<selection::Condition> conditions;
  std::uint64_t seed = 0;
  int samples = 5;
  std::size_t parallelism = 8;
  std::size_t sweep_topics = 20;
  bool offline = false;
  bool deterministic_clock = false;
  bool record_calls = true;
  int retry_attempts = 3;
  int retry_backoff_ms = 1000;

  /// The comparison set used when [pipeline] conditions is not given.
  static std::vector<selection::Condition> default_conditions();

  /// Throws Error(ConfigError).
  static PipelineConfig load(const fs::path& path);
  static PipelineConfig parse(const std::string& ini_text, const fs::path& config_dir);

  /// Checks invariants and the offline rule. Throws Error(ConfigError).
  void validate() const;

  /// Stable digest of the settings that shape outputs.
  std::string fingerprint() const;
};

std::vector<std::string> split_list(const std::string& text);

}  // namespace qzlora::pipeline

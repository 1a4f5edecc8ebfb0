#pragma once

#include "qzlora/corpus/source.hpp"
#include "qzlora/gen/generate.hpp"
#include "qzlora/pipeline/config.hpp"
#include "qzlora/pipeline/report.hpp"
#include "qzlora/pipeline/run_state.hpp"
#include "qzlora/providers/providers.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::pipeline {

enum class Stage { Ingest, Quiz, Score, Select, Manifest, Train, Generate, Evaluate, Report };

inline constexpr std::array<Stage, 9> kStageOrder{Stage::Ingest, Stage::Quiz,     Stage::Score,
                                                  Stage::Select, Stage::Manifest, Stage::Train,
                                                  Stage::Generate, Stage::Evaluate, Stage::Report};

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view text);

/// Replacements for the services the config would build. Tests use these to
/// plug in instrumented providers.
struct Services {
  std::shared_ptr<corpus::ImageSource> source;
  std::shared_ptr<providers::TextCompletionProvider> text;
  std::shared_ptr<providers::VisionProvider> vision;
  std::shared_ptr<gen::ImageBackend> backend;
};

struct UnitFailure {
  std::string key;
  std::string reason;
};

struct StageReport {
  Stage stage = Stage::Ingest;
  std::size_t executed = 0;
  std::size_t skipped = 0;  // already done
  std::vector<UnitFailure> failures;
  std::vector<std::string> dry_run_lines;

  bool ok() const { return failures.empty(); }
};

struct RunOptions {
  std::vector<std::string> topics;  // empty: every configured topic
  bool dry_run = false;             // train and generate only
};

/// Work layout below config.work:
///
///   corpus/<topic>/                  ingested candidates
///   quizzes/<topic>/<quiz_id>.json
///   scores/<quiz_id>/<hash>.json
///   rankings/<topic>.json
///   selections/<topic>/<condition>.json
///   datasets/<topic>/<key>/          trainer input folders
///   manifests/<topic>/<key>.manifest
///   models/<topic>/<key>.safetensors
///   runs/<topic>/<key>.log           trainer output
///   generated/                       images and sample records
///   evaluations/<topic>/<condition>.json
///   report/                          stats.json and CSV tables
///   state/run_state.json
///   calls/calls.jsonl                provider traffic
class Pipeline {
 public:
  using Logger = std::function<void(const std::string&)>;

  /// Throws Error(ConfigError) for an invalid config before doing anything.
  explicit Pipeline(PipelineConfig config, Services services = {}, Logger log = {});
  ~Pipeline();

  /// Runs the pending and failed units of one stage for the scoped topics.
  /// Throws UpstreamIncomplete when a unit's inputs are not done.
  StageReport run_stage(Stage stage, const RunOptions& options = {});
  /// Every stage in order; stops after the first stage with failures.
  std::vector<StageReport> run_all(const RunOptions& options = {});

  const PipelineConfig& config() const { return config_; }
  RunState& state() { return *state_; }
  fs::path report_dir() const { return config_.work / "report"; }

  /// Topics in scope: the filter, checked against the configured set.
  std::vector<std::string> scoped_topics(const RunOptions& options) const;
  /// All configured topics (registry order when the config lists none).
  std::vector<std::string> all_topics() const;
  /// The k-sweep subset, drawn from all_topics() with the run seed.
  std::vector<std::string> sweep_topics() const;
  /// Compared conditions plus the k-sweep conditions for sweep topics.
  std::vector<selection::Condition> conditions_for(const std::string& topic_id) const;

 private:
  struct Impl;
  PipelineConfig config_;
  std::unique_ptr<RunState> state_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qzlora::pipeline

#pragma once

#include "qzlora/corpus/store.hpp"
#include "qzlora/selection/selection.hpp"

#include <optional>
#include <string>

namespace qzlora::train {

/// Hyperparameters shared by every LoRA run. Defaults are the settings all
/// runs in the reference experiment used.
struct TrainingManifest {
  std::string topic_id;
  std::string condition_label;  // selection key, e.g. "qzlora-top-15"
  fs::path dataset_dir;         // parent of the "<repeats>_<token>" image folder
  std::string instance_token;
  int epochs = 20;
  int num_repeats = 5;
  int batch_size = 1;
  double learning_rate = 1e-4;
  std::string optimizer_tag = "AdamW8bit";
  int resolution = 512;
  std::string base_model_tag = "sd-1.5";
  fs::path output_model_path;

  bool operator==(const TrainingManifest&) const = default;
};

struct ManifestOverrides {
  std::optional<int> epochs;
  std::optional<int> num_repeats;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> optimizer_tag;
  std::optional<int> resolution;
  std::optional<std::string> base_model_tag;
  std::optional<std::string> instance_token;
};

/// "mountain-bluebird" -> "mountainbluebird".
std::string default_instance_token(const std::string& topic_id);

struct DatasetOptions {
  int num_repeats = 5;
  std::string instance_token;  // empty: default_instance_token(topic)
  bool repeat_dir = true;      // "<repeats>_<token>/" subfolder convention
};

/// Writes the selected images in selection order as "000.<ext>" plus a
/// same-named ".txt" caption (the stored caption, or the topic summary when
/// that is empty) into `<out_dir>/<num_repeats>_<token>/` and removes anything
/// else in that folder. Returns the image folder. Throws MissingImage or
/// EmptyCaptionAndSummary.
fs::path emit_dataset(const selection::SelectionSet& selection, const corpus::CorpusStore& corpus,
                      const corpus::Topic& topic, const fs::path& out_dir, const DatasetOptions& options = {});

fs::path dataset_image_dir(const fs::path& out_dir, int num_repeats, const std::string& instance_token,
                           bool repeat_dir = true);

/// Defaults plus overrides. Checks that the dataset folder holds one
/// image/caption pair per selected image. Throws InvalidOverride for
/// nonpositive values and MissingImage for an incomplete dataset.
TrainingManifest emit_manifest(const selection::SelectionSet& selection, const fs::path& dataset_dir,
                               const fs::path& output_model_path, const ManifestOverrides& overrides = {},
                               bool repeat_dir = true);

/// Flat "key = value" lines in fixed key order, newline-terminated.
std::string serialize_manifest(const TrainingManifest& manifest);
/// Inverse of serialize_manifest; throws Error(StoreError) on unknown or
/// malformed lines.
TrainingManifest parse_manifest(const std::string& text);

/// Shortest of fixed and exponent notation that round-trips; ties go to fixed.
/// 1e-4 -> "1e-4", 0.5 -> "0.5", 20 -> "20".
std::string format_real(double value);

struct TrainerResult {
  int exit_code = 0;
  fs::path output_model_path;
  double wall_time_seconds = 0.0;
  std::string command;
  fs::path log_path;
  bool dry_run = false;
};

/// Quotes for /bin/sh when the value has characters outside [A-Za-z0-9_./:=+-].
std::string shell_quote(const std::string& value);

/// Substitutes {manifest}, {dataset_dir} and {output} into the template.
/// Throws TemplateError if any placeholder is absent.
std::string substitute_command(const std::string& command_template, const fs::path& manifest_path,
                               const TrainingManifest& manifest);

/// Runs the substituted command through /bin/sh, streaming combined output to
/// `log_path`. With dry_run nothing is spawned. Throws TrainerFailed on a
/// nonzero exit, a missing output file, or a modified dataset folder.
TrainerResult invoke_trainer(const TrainingManifest& manifest, const fs::path& manifest_path,
                             const std::string& command_template, const fs::path& log_path, bool dry_run);

}  // namespace qzlora::train

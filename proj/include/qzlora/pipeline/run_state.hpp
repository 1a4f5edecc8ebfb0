#pragma once

#include "qzlora/util/fs.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::pipeline {

enum class UnitStatus { Pending, Done, Failed };

std::string_view to_string(UnitStatus s);

/// One unit of work: a (stage, topic, condition) triple.
struct UnitState {
  UnitStatus status = UnitStatus::Pending;
  std::string reason;                          // failure reason
  std::map<std::string, std::string> outputs;  // work-relative path -> sha256
  std::map<std::string, std::string> info;     // small facts for later stages

  bool operator==(const UnitState&) const = default;
};

/// "<stage>/<topic>/<condition>", with "-" for absent parts.
std::string unit_key(std::string_view stage, std::string_view topic = "-", std::string_view condition = "-");

/// Persistent record of finished and failed units. All updates go through one
/// mutex and are flushed to disk before returning.
class RunState {
 public:
  /// Loads `state_path` when it exists, otherwise starts empty.
  RunState(fs::path state_path, fs::path work_root, std::string run_id);

  /// Done and every recorded output still has its recorded digest.
  bool is_done(const std::string& key) const;
  std::optional<UnitState> get(const std::string& key) const;

  /// Hashes `outputs` (absolute or work-relative paths) and records the unit.
  void mark_done(const std::string& key, const std::vector<fs::path>& outputs,
                 std::map<std::string, std::string> info = {});
  void mark_failed(const std::string& key, const std::string& reason);

  std::map<std::string, UnitState> units() const;
  const std::string& run_id() const { return run_id_; }
  const fs::path& path() const { return state_path_; }
  const fs::path& work_root() const { return work_root_; }

 private:
  void flush_locked() const;

  fs::path state_path_;
  fs::path work_root_;
  std::string run_id_;
  std::map<std::string, UnitState> units_;
  mutable std::mutex mutex_;
};

}  // namespace qzlora::pipeline

#include "qzlora/pipeline/run_state.hpp"

#include "qzlora/error.hpp"

namespace qzlora::pipeline {

using nlohmann::json;

std::string_view to_string(UnitStatus s) {
  switch (s) {
    case UnitStatus::Pending: return "pending";
    case UnitStatus::Done: return "done";
    case UnitStatus::Failed: return "failed";
  }
  return "pending";
}

namespace {

UnitStatus parse_status(const std::string& s) {
  if (s == "done") return UnitStatus::Done;
  if (s == "failed") return UnitStatus::Failed;
  return UnitStatus::Pending;
}

}  // namespace

std::string unit_key(std::string_view stage, std::string_view topic, std::string_view condition) {
  return std::string(stage) + "/" + std::string(topic.empty() ? "-" : topic) + "/" +
         std::string(condition.empty() ? "-" : condition);
}

RunState::RunState(fs::path state_path, fs::path work_root, std::string run_id)
    : state_path_(std::move(state_path)), work_root_(std::move(work_root)), run_id_(std::move(run_id)) {
  if (!fs::exists(state_path_)) return;
  try {
    const json j = read_json(state_path_);
    for (const auto& [key, u] : j.at("units").items()) {
      UnitState unit;
      unit.status = parse_status(u.at("status").get<std::string>());
      unit.reason = u.value("reason", "");
      unit.outputs = u.value("outputs", std::map<std::string, std::string>{});
      unit.info = u.value("info", std::map<std::string, std::string>{});
      units_[key] = std::move(unit);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreError, state_path_.string() + ": " + e.what());
  }
}

bool RunState::is_done(const std::string& key) const {
  std::map<std::string, std::string> outputs;
  {
    std::lock_guard lock(mutex_);
    const auto it = units_.find(key);
    if (it == units_.end() || it->second.status != UnitStatus::Done) return false;
    outputs = it->second.outputs;
  }
  for (const auto& [rel, digest] : outputs) {
    const fs::path p = work_root_ / rel;
    if (!fs::is_regular_file(p) || sha256_hex(read_file(p)) != digest) return false;
  }
  return true;
}

std::optional<UnitState> RunState::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = units_.find(key);
  if (it == units_.end()) return std::nullopt;
  return it->second;
}

void RunState::mark_done(const std::string& key, const std::vector<fs::path>& outputs,
                         std::map<std::string, std::string> info) {
  UnitState unit;
  unit.status = UnitStatus::Done;
  unit.info = std::move(info);
  for (const auto& p : outputs) {
    const fs::path abs = p.is_absolute() ? p : work_root_ / p;
    unit.outputs[relative_to(abs, work_root_)] = sha256_hex(read_file(abs));
  }
  std::lock_guard lock(mutex_);
  units_[key] = std::move(unit);
  flush_locked();
}

void RunState::mark_failed(const std::string& key, const std::string& reason) {
  std::lock_guard lock(mutex_);
  UnitState& unit = units_[key];
  unit.status = UnitStatus::Failed;
  unit.reason = reason;
  unit.outputs.clear();
  unit.info.clear();
  flush_locked();
}

std::map<std::string, UnitState> RunState::units() const {
  std::lock_guard lock(mutex_);
  return units_;
}

void RunState::flush_locked() const {
  json units = json::object();
  for (const auto& [key, u] : units_) {
    json entry = {{"status", to_string(u.status)}};
    if (!u.reason.empty()) entry["reason"] = u.reason;
    if (!u.outputs.empty()) entry["outputs"] = u.outputs;
    if (!u.info.empty()) entry["info"] = u.info;
    units[key] = std::move(entry);
  }
  atomic_write(state_path_, pretty_json({{"run_id", run_id_}, {"units", units}}));
}

}  // namespace qzlora::pipeline

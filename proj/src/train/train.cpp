#include "qzlora/train/train.hpp"

#include "qzlora/error.hpp"

#include <sys/wait.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace qzlora::train {

std::string default_instance_token(const std::string& topic_id) {
  std::string token;
  for (char c : topic_id) {
    if (c != '-') token.push_back(c);
  }
  return token;
}

fs::path dataset_image_dir(const fs::path& out_dir, int num_repeats, const std::string& instance_token,
                           bool repeat_dir) {
  return repeat_dir ? out_dir / (std::to_string(num_repeats) + "_" + instance_token) : out_dir;
}

namespace {

std::string pad3(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() >= 3 ? s : std::string(3 - s.size(), '0') + s;
}

void check_positive(const char* name, double value) {
  if (!(value > 0)) throw Error(ErrorCode::InvalidOverride, std::string(name) + " must be positive");
}

}  // namespace

fs::path emit_dataset(const selection::SelectionSet& selection, const corpus::CorpusStore& corpus,
                      const corpus::Topic& topic, const fs::path& out_dir, const DatasetOptions& options) {
  check_positive("num_repeats", options.num_repeats);
  const std::string token = options.instance_token.empty() ? default_instance_token(topic.topic_id)
                                                           : options.instance_token;
  const std::vector<corpus::CandidateImage> candidates = corpus.load_corpus(selection.topic_id);
  std::map<std::string, const corpus::CandidateImage*> by_id;
  for (const auto& c : candidates) by_id[c.image_id] = &c;

  // Resolve everything before touching the output folder.
  struct Item {
    const corpus::CandidateImage* image;
    Bytes bytes;
    std::string caption;
  };
  std::vector<Item> items;
  for (const auto& id : selection.image_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingImage, id + " is not in the corpus");
    if (it->second->corrupt) throw Error(ErrorCode::MissingImage, id + " is corrupt on disk");
    std::string caption = it->second->caption;
    if (caption.find_first_not_of(" \t\r\n") == std::string::npos) caption = topic.summary_sentence;
    if (caption.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw Error(ErrorCode::EmptyCaptionAndSummary, id);
    }
    items.push_back({it->second, corpus.read_image(*it->second), caption});
  }

  const fs::path image_dir = dataset_image_dir(out_dir, options.num_repeats, token, options.repeat_dir);
  fs::create_directories(image_dir);
  std::set<std::string> keep;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string base = pad3(i);
    const std::string image_name = base + "." + std::string(extension(items[i].image->format));
    keep.insert(image_name);
    keep.insert(base + ".txt");
    const fs::path image_path = image_dir / image_name;
    const fs::path caption_path = image_dir / (base + ".txt");
    if (!fs::exists(image_path) || read_file(image_path) != items[i].bytes) atomic_write(image_path, items[i].bytes);
    if (!fs::exists(caption_path) || read_file(caption_path) != items[i].caption) {
      atomic_write(caption_path, items[i].caption);
    }
  }
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (!keep.count(entry.path().filename().string())) fs::remove_all(entry.path());
  }
  return image_dir;
}

TrainingManifest emit_manifest(const selection::SelectionSet& selection, const fs::path& dataset_dir,
                               const fs::path& output_model_path, const ManifestOverrides& overrides,
                               bool repeat_dir) {
  TrainingManifest m;
  m.topic_id = selection.topic_id;
  m.condition_label = selection.condition.selection_key();
  m.dataset_dir = dataset_dir;
  m.instance_token = overrides.instance_token.value_or(default_instance_token(selection.topic_id));
  m.epochs = overrides.epochs.value_or(m.epochs);
  m.num_repeats = overrides.num_repeats.value_or(m.num_repeats);
  m.batch_size = overrides.batch_size.value_or(m.batch_size);
  m.learning_rate = overrides.learning_rate.value_or(m.learning_rate);
  m.optimizer_tag = overrides.optimizer_tag.value_or(m.optimizer_tag);
  m.resolution = overrides.resolution.value_or(m.resolution);
  m.base_model_tag = overrides.base_model_tag.value_or(m.base_model_tag);
  m.output_model_path = output_model_path;

  check_positive("epochs", m.epochs);
  check_positive("num_repeats", m.num_repeats);
  check_positive("batch_size", m.batch_size);
  check_positive("learning_rate", m.learning_rate);
  check_positive("resolution", m.resolution);
  if (m.instance_token.empty()) throw Error(ErrorCode::InvalidOverride, "instance_token is empty");
  if (m.optimizer_tag.empty()) throw Error(ErrorCode::InvalidOverride, "optimizer_tag is empty");

  const fs::path image_dir = dataset_image_dir(dataset_dir, m.num_repeats, m.instance_token, repeat_dir);
  std::size_t images = 0;
  std::size_t captions = 0;
  if (fs::exists(image_dir)) {
    for (const auto& entry : fs::directory_iterator(image_dir)) {
      (entry.path().extension() == ".txt" ? captions : images) += 1;
    }
  }
  if (images != selection.image_ids.size() || captions != selection.image_ids.size()) {
    throw Error(ErrorCode::MissingImage, image_dir.string() + " does not hold " +
                                             std::to_string(selection.image_ids.size()) + " image/caption pairs");
  }
  return m;
}

std::string format_real(double value) {
  std::array<char, 64> fixed{};
  std::array<char, 64> sci{};
  auto f = std::to_chars(fixed.data(), fixed.data() + fixed.size(), value, std::chars_format::fixed);
  auto s = std::to_chars(sci.data(), sci.data() + sci.size(), value, std::chars_format::scientific);
  std::string fixed_text(fixed.data(), f.ptr);
  std::string sci_text(sci.data(), s.ptr);
  // "1e-04" -> "1e-4", "1.5e+02" -> "1.5e2"
  if (const auto e = sci_text.find('e'); e != std::string::npos) {
    std::string mantissa = sci_text.substr(0, e);
    std::string exponent = sci_text.substr(e + 1);
    const bool negative = !exponent.empty() && exponent[0] == '-';
    if (!exponent.empty() && (exponent[0] == '-' || exponent[0] == '+')) exponent.erase(0, 1);
    exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
    sci_text = mantissa + "e" + (negative ? "-" : "") + exponent;
  }
  return sci_text.size() < fixed_text.size() ? sci_text : fixed_text;
}

std::string serialize_manifest(const TrainingManifest& m) {
  std::ostringstream out;
  out << "topic_id = " << m.topic_id << "\n"
      << "condition_label = " << m.condition_label << "\n"
      << "dataset_dir = " << m.dataset_dir.generic_string() << "\n"
      << "instance_token = " << m.instance_token << "\n"
      << "epochs = " << m.epochs << "\n"
      << "num_repeats = " << m.num_repeats << "\n"
      << "batch_size = " << m.batch_size << "\n"
      << "learning_rate = " << format_real(m.learning_rate) << "\n"
      << "optimizer_tag = " << m.optimizer_tag << "\n"
      << "resolution = " << m.resolution << "\n"
      << "base_model_tag = " << m.base_model_tag << "\n"
      << "output_model_path = " << m.output_model_path.generic_string() << "\n";
  return out.str();
}

TrainingManifest parse_manifest(const std::string& text) {
  TrainingManifest m;
  std::istringstream in(text);
  std::string line;
  auto to_int = [](const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      throw Error(ErrorCode::StoreError, "manifest: " + key + " is not an integer");
    }
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw Error(ErrorCode::StoreError, "manifest: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "topic_id") m.topic_id = value;
    else if (key == "condition_label") m.condition_label = value;
    else if (key == "dataset_dir") m.dataset_dir = value;
    else if (key == "instance_token") m.instance_token = value;
    else if (key == "epochs") m.epochs = to_int(key, value);
    else if (key == "num_repeats") m.num_repeats = to_int(key, value);
    else if (key == "batch_size") m.batch_size = to_int(key, value);
    else if (key == "learning_rate") {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorCode::StoreError, "manifest: learning_rate is not a number");
      }
      m.learning_rate = v;
    } else if (key == "optimizer_tag") m.optimizer_tag = value;
    else if (key == "resolution") m.resolution = to_int(key, value);
    else if (key == "base_model_tag") m.base_model_tag = value;
    else if (key == "output_model_path") m.output_model_path = value;
    else throw Error(ErrorCode::StoreError, "manifest: unknown key '" + key + "'");
  }
  return m;
}

std::string shell_quote(const std::string& value) {
  const bool safe = !value.empty() && value.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
                                                              "0123456789_./:=+-") == std::string::npos;
  if (safe) return value;
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

std::string substitute_command(const std::string& command_template, const fs::path& manifest_path,
                               const TrainingManifest& manifest) {
  const std::pair<std::string, std::string> values[] = {
      {"{manifest}", shell_quote(manifest_path.generic_string())},
      {"{dataset_dir}", shell_quote(manifest.dataset_dir.generic_string())},
      {"{output}", shell_quote(manifest.output_model_path.generic_string())},
  };
  for (const auto& [key, value] : values) {
    if (command_template.find(key) == std::string::npos) {
      throw Error(ErrorCode::TemplateError, "command template lacks " + key);
    }
  }
  std::string command = command_template;
  for (const auto& [key, value] : values) {
    for (std::size_t pos = 0; (pos = command.find(key, pos)) != std::string::npos; pos += value.size()) {
      command.replace(pos, key.size(), value);
    }
  }
  return command;
}

TrainerResult invoke_trainer(const TrainingManifest& manifest, const fs::path& manifest_path,
                             const std::string& command_template, const fs::path& log_path, bool dry_run) {
  TrainerResult result;
  result.command = substitute_command(command_template, manifest_path, manifest);
  result.output_model_path = manifest.output_model_path;
  result.log_path = log_path;
  result.dry_run = dry_run;
  if (dry_run) return result;

  const std::string dataset_before = tree_digest(manifest.dataset_dir);
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  if (manifest.output_model_path.has_parent_path()) fs::create_directories(manifest.output_model_path.parent_path());

  const auto start = std::chrono::steady_clock::now();
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  log << "$ " << result.command << "\n" << std::flush;
  const std::string shell_command = "exec 2>&1; " + result.command;
  FILE* pipe = ::popen(shell_command.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::TrainerFailed, "cannot spawn: " + result.command);
  std::array<char, 4096> buffer{};
  while (std::fgets(buffer.data(), static_cast<int>(buffer.size()), pipe)) {
    log << buffer.data() << std::flush;
  }
  const int status = ::pclose(pipe);
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  log << "# exit " << result.exit_code << "\n";

  if (result.exit_code != 0) {
    throw Error(ErrorCode::TrainerFailed,
                "exit code " + std::to_string(result.exit_code) + ", see " + log_path.string());
  }
  if (!fs::exists(manifest.output_model_path)) {
    throw Error(ErrorCode::TrainerFailed, "trainer exited 0 but " + manifest.output_model_path.string() + " is missing");
  }
  if (tree_digest(manifest.dataset_dir) != dataset_before) {
    throw Error(ErrorCode::TrainerFailed, "trainer modified " + manifest.dataset_dir.string());
  }
  return result;
}

}  // namespace qzlora::train

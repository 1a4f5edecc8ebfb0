#include "qzlora/pipeline/config.hpp"

#include "qzlora/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace qzlora::pipeline {

namespace pt = boost::property_tree;
using selection::Condition;
using selection::ConditionKind;
using selection::Style;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

std::vector<Condition> PipelineConfig::default_conditions() {
  return {
      Condition::make(ConditionKind::NoLoRA, 0, Style::Realistic),
      Condition::make(ConditionKind::LoRARandomK, 15, Style::Realistic),
      Condition::make(ConditionKind::QZLoRATopK, 2, Style::Realistic),
      Condition::make(ConditionKind::QZLoRATopK, 15, Style::Realistic),
      Condition::make(ConditionKind::RealRandomK, 5, Style::Realistic),
      Condition::make(ConditionKind::RealTopK, 5, Style::Realistic),
      Condition::make(ConditionKind::NoLoRA, 0, Style::Illustration),
      Condition::make(ConditionKind::QZLoRATopK, 15, Style::Illustration),
  };
}

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!s) return std::nullopt;
    const auto v = s->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return v->data();
  }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
    return get(section, key).value_or(fallback);
  }

  template <class T>
  T number(const std::string& section, const std::string& key, T fallback) const {
    const auto v = get(section, key);
    if (!v) return fallback;
    std::istringstream in(*v);
    T out{};
    if (!(in >> out) || !(in >> std::ws).eof()) config_error("[" + section + "] " + key + " is not a number: " + *v);
    return out;
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    const auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    config_error("[" + section + "] " + key + " is not a boolean: " + *v);
  }

 private:
  const pt::ptree& tree_;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

ProviderConfig read_provider(const Reader& r, const std::string& section, const fs::path& base, const char* key_env) {
  ProviderConfig p;
  p.kind = r.text(section, "provider", p.kind);
  p.endpoint = r.text(section, "endpoint", "");
  p.model_id = r.text(section, "model", p.model_id);
  p.fixtures = resolve(base, r.text(section, "fixtures", ""));
  if (const char* key = std::getenv(key_env)) p.api_key = key;
  return p;
}

}  // namespace

PipelineConfig PipelineConfig::parse(const std::string& ini_text, const fs::path& config_dir) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(e.what());
  }
  const Reader r(tree);
  PipelineConfig c;
  c.config_dir = fs::absolute(config_dir).lexically_normal();
  const fs::path& base = c.config_dir;

  c.registry = resolve(base, r.text("paths", "registry", "registry.json"));
  c.source = resolve(base, r.text("paths", "source", "source"));
  c.work = resolve(base, r.text("paths", "work", "work"));
  c.templates = resolve(base, r.text("paths", "templates", ""));
  c.prompts = resolve(base, r.text("paths", "prompts", "prompts.ini"));

  c.ingest_source = r.text("ingest", "source", c.ingest_source);
  c.ingest_cap = r.number<std::size_t>("ingest", "cap", c.ingest_cap);
  c.ingest_parallelism = r.number<std::size_t>("ingest", "parallelism", c.ingest_parallelism);
  c.min_width = r.number<std::uint32_t>("ingest", "min_width", c.min_width);
  c.min_height = r.number<std::uint32_t>("ingest", "min_height", c.min_height);
  c.enforce_eligibility = r.flag("ingest", "enforce_eligibility", c.enforce_eligibility);

  c.text = read_provider(r, "text", base, "TEXT_API_KEY");
  c.vision = read_provider(r, "vision", base, "VISION_API_KEY");

  c.backend_kind = r.text("image_backend", "kind", c.backend_kind);
  c.backend_endpoint = r.text("image_backend", "endpoint", "");
  c.backend_model_tag = r.text("image_backend", "model_tag", c.backend_model_tag);
  c.steps = r.number<int>("image_backend", "steps", c.steps);
  c.cfg = r.number<double>("image_backend", "cfg", c.cfg);
  c.width = r.number<int>("image_backend", "width", c.width);
  c.height = r.number<int>("image_backend", "height", c.height);
  c.lora_weight = r.number<double>("image_backend", "lora_weight", c.lora_weight);
  c.stub_size = r.number<std::uint32_t>("image_backend", "stub_size", c.stub_size);

  c.trainer_command = r.text("trainer", "command", "");
  for (std::size_t pos = 0; (pos = c.trainer_command.find("{config_dir}", pos)) != std::string::npos;) {
    c.trainer_command.replace(pos, 12, train::shell_quote(base.generic_string()));
  }
  c.trainer_jobs = r.number<std::size_t>("trainer", "jobs", c.trainer_jobs);
  auto& o = c.manifest_overrides;
  if (r.get("trainer", "epochs")) o.epochs = r.number<int>("trainer", "epochs", 0);
  if (r.get("trainer", "num_repeats")) o.num_repeats = r.number<int>("trainer", "num_repeats", 0);
  if (r.get("trainer", "batch_size")) o.batch_size = r.number<int>("trainer", "batch_size", 0);
  if (r.get("trainer", "learning_rate")) o.learning_rate = r.number<double>("trainer", "learning_rate", 0);
  if (r.get("trainer", "resolution")) o.resolution = r.number<int>("trainer", "resolution", 0);
  if (auto v = r.get("trainer", "optimizer_tag")) o.optimizer_tag = *v;
  if (auto v = r.get("trainer", "base_model_tag")) o.base_model_tag = *v;

  c.topics = split_list(r.text("pipeline", "topics", ""));
  c.question_count = r.number<int>("pipeline", "question_count", c.question_count);
  if (auto v = r.get("pipeline", "ks")) {
    c.ks.clear();
    for (const auto& item : split_list(*v)) {
      try {
        c.ks.push_back(std::stoi(item));
      } catch (const std::exception&) {
        config_error("[pipeline] ks has a non-integer entry: " + item);
      }
    }
  }
  if (auto v = r.get("pipeline", "conditions")) {
    for (const auto& label : split_list(*v)) {
      try {
        c.conditions.push_back(Condition::parse(label));
      } catch (const Error& e) {
        config_error("[pipeline] conditions: " + std::string(e.what()));
      }
    }
  } else {
    c.conditions = default_conditions();
  }
  c.seed = r.number<std::uint64_t>("pipeline", "seed", c.seed);
  c.samples = r.number<int>("pipeline", "samples", c.samples);
  c.parallelism = r.number<std::size_t>("pipeline", "parallelism", c.parallelism);
  c.sweep_topics = r.number<std::size_t>("pipeline", "sweep_topics", c.sweep_topics);
  c.offline = r.flag("pipeline", "offline", c.offline);
  c.deterministic_clock = r.flag("pipeline", "deterministic_clock", c.deterministic_clock);
  c.record_calls = r.flag("pipeline", "record_calls", c.record_calls);
  c.retry_attempts = r.number<int>("pipeline", "retry_attempts", c.retry_attempts);
  c.retry_backoff_ms = r.number<int>("pipeline", "retry_backoff_ms", c.retry_backoff_ms);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) config_error(path.string() + " not found");
  PipelineConfig c = parse(read_file(path), fs::absolute(path).parent_path());
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (!fs::is_regular_file(registry)) config_error("registry " + registry.string() + " not found");
  if (ingest_source != "local" && ingest_source != "commons") config_error("unknown ingest source " + ingest_source);
  if (ingest_source == "local" && !fs::is_directory(source)) config_error("source " + source.string() + " not found");
  if (!templates.empty() && !fs::is_directory(templates)) config_error("templates " + templates.string() + " not found");
  if (!fs::is_regular_file(prompts)) config_error("prompt templates " + prompts.string() + " not found");
  if (parallelism < 1 || ingest_parallelism < 1 || trainer_jobs < 1) config_error("parallelism must be at least 1");
  if (ingest_cap < 1) config_error("ingest cap must be at least 1");
  if (question_count < 1 || question_count > 30) config_error("question_count must be in 1..30");
  if (samples < 1) config_error("samples must be at least 1");
  if (retry_attempts < 1) config_error("retry_attempts must be at least 1");
  if (ks.empty()) config_error("ks is empty");
  if (!std::is_sorted(ks.begin(), ks.end()) || std::adjacent_find(ks.begin(), ks.end()) != ks.end()) {
    config_error("ks must be strictly ascending");
  }
  if (ks.front() < 1) config_error("ks must be positive");
  if (conditions.empty()) config_error("no conditions");
  if (trainer_command.empty()) config_error("[trainer] command is required");
  for (const char* placeholder : {"{manifest}", "{dataset_dir}", "{output}"}) {
    if (trainer_command.find(placeholder) == std::string::npos) {
      config_error(std::string("[trainer] command lacks ") + placeholder);
    }
  }

  for (const auto* p : {&text, &vision}) {
    const std::string name = p == &text ? "text" : "vision";
    if (p->kind == "mock") continue;
    if (p->kind == "replay") {
      if (!fs::is_regular_file(p->fixtures)) config_error("[" + name + "] replay log " + p->fixtures.string() + " not found");
      continue;
    }
    if (p->kind != "openai") config_error("[" + name + "] unknown provider " + p->kind);
    if (offline) config_error("[" + name + "] provider needs the network but the run is offline");
    try {
      Url::parse(p->endpoint);
    } catch (const std::exception&) {
      config_error("[" + name + "] endpoint is not an http(s) URL");
    }
    if (p->api_key.empty()) {
      config_error("[" + name + "] provider needs " + (name == "text" ? "TEXT_API_KEY" : "VISION_API_KEY"));
    }
  }
  if (backend_kind == "http") {
    if (offline) config_error("[image_backend] http backend needs the network but the run is offline");
    try {
      Url::parse(backend_endpoint);
    } catch (const std::exception&) {
      config_error("[image_backend] endpoint is not an http(s) URL");
    }
  } else if (backend_kind != "stub") {
    config_error("[image_backend] unknown kind " + backend_kind);
  }
  if (offline && ingest_source == "commons") config_error("[ingest] commons source needs the network but the run is offline");
}

std::string PipelineConfig::fingerprint() const {
  nlohmann::json j;
  std::vector<std::string> labels;
  for (const auto& c : conditions) labels.push_back(c.label());
  j["conditions"] = labels;
  j["ks"] = ks;
  j["seed"] = seed;
  j["samples"] = samples;
  j["question_count"] = question_count;
  j["topics"] = topics;
  j["sweep_topics"] = sweep_topics;
  j["text_model"] = text.model_id;
  j["vision_model"] = vision.model_id;
  j["backend"] = backend_kind + ":" + backend_model_tag;
  return sha256_hex(canonical_json(j));
}

}  // namespace qzlora::pipeline

#include "qzlora/gen/generate.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/image_info.hpp"
#include "qzlora/util/png_writer.hpp"

#include <random>
#include <stdexcept>

namespace qzlora::gen {

using nlohmann::json;

json to_json(const BackendRequest& r) {
  json j = {{"positive", r.positive}, {"negative", r.negative}, {"seed", r.seed},   {"steps", r.steps},
            {"cfg", r.cfg},           {"width", r.width},       {"height", r.height}};
  if (r.lora_tag) {
    j["lora_tag"] = *r.lora_tag;
    j["lora_weight"] = r.lora_weight;
  }
  return j;
}

namespace {

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T optional_field(const json& j, const char* key, T fallback) {
  return j.contains(key) ? required<T>(j, key) : fallback;
}

}  // namespace

BackendRequest backend_request_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("request body is not a JSON object");
  BackendRequest r;
  r.positive = required<std::string>(j, "positive");
  r.negative = optional_field<std::string>(j, "negative", "");
  if (!j.contains("seed") || !j.at("seed").is_number_unsigned()) {
    throw std::invalid_argument("missing field 'seed' or not an unsigned integer");
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.steps = optional_field<int>(j, "steps", r.steps);
  r.cfg = optional_field<double>(j, "cfg", r.cfg);
  r.width = optional_field<int>(j, "width", r.width);
  r.height = optional_field<int>(j, "height", r.height);
  if (j.contains("lora_tag") && !j.at("lora_tag").is_null()) r.lora_tag = required<std::string>(j, "lora_tag");
  r.lora_weight = optional_field<double>(j, "lora_weight", r.lora_weight);
  if (r.positive.empty()) throw std::invalid_argument("field 'positive' is empty");
  if (r.steps < 1 || r.width < 1 || r.height < 1) throw std::invalid_argument("steps, width and height must be positive");
  return r;
}

json to_json(const BackendResponse& r) { return {{"image", base64_encode(r.image)}, {"metadata", r.metadata}}; }

BackendResponse backend_response_from_json(const json& j) {
  if (!j.is_object() || !j.contains("image") || !j.at("image").is_string()) {
    throw std::invalid_argument("response lacks a base64 'image' string");
  }
  BackendResponse r;
  r.image = base64_decode(j.at("image").get<std::string>());
  if (j.contains("metadata")) r.metadata = j.at("metadata");
  return r;
}

HttpImageBackend::HttpImageBackend(std::string endpoint_url, std::string model_tag, RetryPolicy retry,
                                   HttpClient client)
    : endpoint_(std::move(endpoint_url)), model_tag_(std::move(model_tag)), retry_(retry), client_(std::move(client)) {
  Url::parse(endpoint_);
}

BackendResponse HttpImageBackend::render(const BackendRequest& request) {
  std::lock_guard lock(mutex_);
  const std::string body = to_json(request).dump();
  try {
    return with_retry(retry_, [&] {
      const HttpResponse response = client_.post(endpoint_, body, "application/json");
      if (response.status < 200 || response.status >= 300) {
        throw std::runtime_error("HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200));
      }
      return backend_response_from_json(json::parse(response.body));
    });
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, endpoint_ + ": " + e.what());
  }
}

BackendResponse StubImageBackend::render(const BackendRequest& request) {
  const std::uint64_t key = sha256_u64(model_tag_ + "\n" + canonical_json(to_json(request)));
  BackendResponse response;
  response.image = render_noise_png(key, size_, size_);
  response.metadata = {{"backend", "stub"}, {"model_tag", model_tag_}, {"seed", request.seed}};
  if (request.lora_tag) response.metadata["lora_tag"] = *request.lora_tag;
  return response;
}

std::pair<int, std::string> serve_backend_request(ImageBackend& backend, const std::string& body) {
  BackendRequest request;
  try {
    request = backend_request_from_json(json::parse(body));
  } catch (const json::parse_error&) {
    return {400, json{{"error", "request body is not valid JSON"}}.dump()};
  } catch (const std::invalid_argument& e) {
    return {400, json{{"error", e.what()}}.dump()};
  }
  try {
    return {200, to_json(backend.render(request)).dump()};
  } catch (const std::exception& e) {
    return {503, json{{"error", e.what()}}.dump()};
  }
}

json to_json(const GeneratedImage& g) {
  json j = {{"gen_id", g.gen_id},
            {"topic_id", g.topic_id},
            {"condition", g.condition.label()},
            {"sample_index", g.sample_index},
            {"seed", g.seed},
            {"image_hash", g.image_hash},
            {"file_name", g.file_name},
            {"backend_model_tag", g.backend_model_tag}};
  if (g.lora_tag) j["lora_tag"] = *g.lora_tag;
  return j;
}

GeneratedImage generated_image_from_json(const json& j) {
  GeneratedImage g;
  g.gen_id = j.at("gen_id").get<std::string>();
  g.topic_id = j.at("topic_id").get<std::string>();
  g.condition = selection::Condition::parse(j.at("condition").get<std::string>());
  g.sample_index = j.at("sample_index").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.image_hash = j.at("image_hash").get<std::string>();
  g.file_name = j.at("file_name").get<std::string>();
  g.backend_model_tag = j.at("backend_model_tag").get<std::string>();
  if (j.contains("lora_tag")) g.lora_tag = j.at("lora_tag").get<std::string>();
  return g;
}

std::string GenerationStore::put_image(const Bytes& bytes) const {
  const auto info = sniff_image(bytes);
  if (!info) throw Error(ErrorCode::BackendUnavailable, "backend returned an undecodable image");
  const std::string name = sha256_hex(bytes) + "." + std::string(extension(info->format));
  const fs::path path = root_ / "images" / name;
  if (!fs::exists(path)) atomic_write(path, bytes);
  return name;
}

void GenerationStore::save_records(const std::string& topic_id, const selection::Condition& c,
                                   const std::vector<GeneratedImage>& records) const {
  json list = json::array();
  for (const auto& r : records) list.push_back(to_json(r));
  atomic_write(records_path(topic_id, c), pretty_json(list));
}

std::vector<GeneratedImage> GenerationStore::load_records(const std::string& topic_id,
                                                          const selection::Condition& c) const {
  const fs::path path = records_path(topic_id, c);
  if (!fs::exists(path)) throw Error(ErrorCode::StoreError, path.string() + " not found");
  std::vector<GeneratedImage> out;
  try {
    for (const auto& j : read_json(path)) out.push_back(generated_image_from_json(j));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StoreError, path.string() + ": " + e.what());
  }
  return out;
}

std::uint64_t derive_generation_seed(const std::string& topic_id, const std::string& condition_label,
                                     int sample_index) {
  return sha256_u64(topic_id + "|" + condition_label + "|" + std::to_string(sample_index));
}

std::vector<GeneratedImage> generate_samples(const corpus::Topic& topic, const selection::Condition& condition,
                                             const PromptPair& prompts, ImageBackend& backend,
                                             const GenerateOptions& options) {
  if (options.n < 1) throw std::invalid_argument("n must be at least 1");
  if (options.seeds && options.seeds->size() != static_cast<std::size_t>(options.n)) {
    throw std::invalid_argument("seed count differs from n");
  }
  if (condition.is_real()) throw Error(ErrorCode::InvalidCondition, condition.label() + " is not generated");
  if (condition.style != prompts.style) {
    throw Error(ErrorCode::InvalidCondition, condition.label() + " does not match the prompt style");
  }

  std::optional<std::string> lora_tag;
  if (condition.uses_lora()) {
    if (!options.lora_model_path || !fs::is_regular_file(*options.lora_model_path)) {
      throw Error(ErrorCode::MissingLoRA, options.lora_model_path ? options.lora_model_path->string()
                                                                  : "no model path for " + condition.label());
    }
    lora_tag = options.lora_model_path->stem().string();
  }

  std::random_device entropy;
  std::vector<GeneratedImage> records;
  for (int i = 0; i < options.n; ++i) {
    BackendRequest request;
    request.positive = prompts.positive;
    request.negative = prompts.negative;
    if (options.seeds) {
      request.seed = (*options.seeds)[i];
    } else if (options.derive_seeds) {
      request.seed = derive_generation_seed(topic.topic_id, condition.label(), i);
    } else {
      request.seed = (std::uint64_t{entropy()} << 32) | entropy();
    }
    request.steps = options.steps;
    request.cfg = options.cfg;
    request.width = options.width;
    request.height = options.height;
    request.lora_tag = lora_tag;
    request.lora_weight = options.lora_weight;

    const BackendResponse response = backend.render(request);
    GeneratedImage g;
    g.gen_id = topic.topic_id + "." + condition.file_stem() + "." + std::to_string(i);
    g.topic_id = topic.topic_id;
    g.condition = condition;
    g.sample_index = i;
    g.seed = request.seed;
    const auto info = sniff_image(response.image);
    if (!info) throw Error(ErrorCode::BackendUnavailable, "backend returned an undecodable image");
    g.image_hash = sha256_hex(response.image);
    g.file_name = options.store ? options.store->put_image(response.image)
                                : g.image_hash + "." + std::string(extension(info->format));
    g.backend_model_tag = backend.model_tag();
    g.lora_tag = lora_tag;
    records.push_back(std::move(g));
  }
  if (options.store) options.store->save_records(topic.topic_id, condition, records);
  return records;
}

}  // namespace qzlora::gen

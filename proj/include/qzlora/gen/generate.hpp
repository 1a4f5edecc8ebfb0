#pragma once

#include "qzlora/gen/prompts.hpp"
#include "qzlora/util/http.hpp"
#include "qzlora/util/retry.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::gen {

/// Body of a backend call. lora_tag and lora_weight are sent only when a LoRA
/// is applied.
struct BackendRequest {
  std::string positive;
  std::string negative;
  std::uint64_t seed = 0;
  int steps = 30;
  double cfg = 7.0;
  int width = 512;
  int height = 512;
  std::optional<std::string> lora_tag;
  double lora_weight = 1.0;

  bool operator==(const BackendRequest&) const = default;
};

nlohmann::json to_json(const BackendRequest& r);
/// Throws std::invalid_argument naming the first missing or mistyped field.
BackendRequest backend_request_from_json(const nlohmann::json& j);

struct BackendResponse {
  Bytes image;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Response JSON: {"image": <base64>, "metadata": {...}}.
nlohmann::json to_json(const BackendResponse& r);
BackendResponse backend_response_from_json(const nlohmann::json& j);

class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  /// Throws Error(BackendUnavailable) when no image can be produced.
  virtual BackendResponse render(const BackendRequest& request) = 0;
  virtual std::string model_tag() const = 0;
};

/// Client for a diffusion server speaking the JSON contract above. Calls are
/// serialized per instance.
class HttpImageBackend : public ImageBackend {
 public:
  HttpImageBackend(std::string endpoint_url, std::string model_tag, RetryPolicy retry = {},
                   HttpClient client = HttpClient{});

  BackendResponse render(const BackendRequest& request) override;
  std::string model_tag() const override { return model_tag_; }

 private:
  std::string endpoint_;
  std::string model_tag_;
  RetryPolicy retry_;
  HttpClient client_;
  std::mutex mutex_;
};

/// Renders seed-keyed RGB noise. The image depends on every request field, so
/// different LoRAs or prompts give different bytes.
class StubImageBackend : public ImageBackend {
 public:
  explicit StubImageBackend(std::string model_tag = "stub-sd-1.5", std::uint32_t size = 64)
      : model_tag_(std::move(model_tag)), size_(size) {}

  BackendResponse render(const BackendRequest& request) override;
  std::string model_tag() const override { return model_tag_; }

 private:
  std::string model_tag_;
  std::uint32_t size_;
};

/// Server side of the contract: maps a request body to (status, JSON body).
/// Malformed requests get 400 with {"error": ...}; backend failures get 503.
std::pair<int, std::string> serve_backend_request(ImageBackend& backend, const std::string& body);

struct GeneratedImage {
  std::string gen_id;  // "<topic>.<condition file stem>.<index>"
  std::string topic_id;
  selection::Condition condition;
  int sample_index = 0;
  std::uint64_t seed = 0;
  std::string image_hash;
  std::string file_name;  // "<image_hash>.<ext>" under the image store
  std::string backend_model_tag;
  std::optional<std::string> lora_tag;

  bool operator==(const GeneratedImage&) const = default;
};

nlohmann::json to_json(const GeneratedImage& g);
GeneratedImage generated_image_from_json(const nlohmann::json& j);

/// Content-addressed images under `<root>/images/` and per-condition record
/// lists under `<root>/<topic>/<condition file stem>.json`.
class GenerationStore {
 public:
  explicit GenerationStore(fs::path root) : root_(std::move(root)) {}

  fs::path image_path(const GeneratedImage& g) const { return root_ / "images" / g.file_name; }
  fs::path records_path(const std::string& topic_id, const selection::Condition& c) const {
    return root_ / topic_id / (c.file_stem() + ".json");
  }
  /// Returns the file name it was stored under.
  std::string put_image(const Bytes& bytes) const;
  void save_records(const std::string& topic_id, const selection::Condition& c,
                    const std::vector<GeneratedImage>& records) const;
  /// Throws StoreError when absent or malformed.
  std::vector<GeneratedImage> load_records(const std::string& topic_id, const selection::Condition& c) const;

 private:
  fs::path root_;
};

/// sha256_u64("<topic_id>|<condition label>|<sample_index>").
std::uint64_t derive_generation_seed(const std::string& topic_id, const std::string& condition_label,
                                     int sample_index);

struct GenerateOptions {
  int n = 5;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool derive_seeds = true;  // false: fresh entropy when seeds are not given
  int steps = 30;
  double cfg = 7.0;
  int width = 512;
  int height = 512;
  double lora_weight = 1.0;
  std::optional<fs::path> lora_model_path;  // required for LoRA conditions
  const GenerationStore* store = nullptr;
};

/// One backend call per sample. The LoRA tag is the model file's stem.
/// Throws MissingLoRA, BackendUnavailable, InvalidCondition for real-image
/// conditions or a style mismatch, std::invalid_argument for a bad n or seed
/// count.
std::vector<GeneratedImage> generate_samples(const corpus::Topic& topic, const selection::Condition& condition,
                                             const PromptPair& prompts, ImageBackend& backend,
                                             const GenerateOptions& options = {});

}  // namespace qzlora::gen

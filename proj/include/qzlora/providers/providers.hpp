#pragma once

#include "qzlora/util/digest.hpp"
#include "qzlora/util/fs.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace qzlora::providers {

struct TextRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  int max_tokens = 2048;
  double temperature = 0.0;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct TextResponse {
  std::string text;
  TokenUsage usage;
};

struct VisionRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  Bytes image_bytes;
  std::string media_type;
};

struct VisionResponse {
  std::string text;
};

/// Text-only completion service used for quiz generation. Implementations
/// throw on failure; callers own the retry policy.
class TextCompletionProvider {
 public:
  virtual ~TextCompletionProvider() = default;
  virtual TextResponse complete(const TextRequest& request) = 0;
};

/// Answers a text prompt about one attached image.
class VisionProvider {
 public:
  virtual ~VisionProvider() = default;
  virtual VisionResponse ask(const VisionRequest& request) = 0;
};

/// Digest of the canonical JSON form of a request. Vision requests hash the
/// image by its digest, so the key is (image digest, prompt, model).
std::string request_digest(const TextRequest& request);
std::string request_digest(const VisionRequest& request);

/// Adapters for tests and simulations.
class FunctionTextProvider : public TextCompletionProvider {
 public:
  explicit FunctionTextProvider(std::function<TextResponse(const TextRequest&)> fn) : fn_(std::move(fn)) {}
  TextResponse complete(const TextRequest& request) override { return fn_(request); }

 private:
  std::function<TextResponse(const TextRequest&)> fn_;
};

class FunctionVisionProvider : public VisionProvider {
 public:
  explicit FunctionVisionProvider(std::function<VisionResponse(const VisionRequest&)> fn) : fn_(std::move(fn)) {}
  VisionResponse ask(const VisionRequest& request) override { return fn_(request); }

 private:
  std::function<VisionResponse(const VisionRequest&)> fn_;
};

/// Deterministic text mock: the response is `<fixture_dir>/<request digest>.txt`
/// when that file exists; otherwise a synthetic quiz payload derived from the
/// request digest (question count taken from "exactly N" in the prompt,
/// defaulting to 10).
class MockTextProvider : public TextCompletionProvider {
 public:
  explicit MockTextProvider(fs::path fixture_dir = {}) : fixture_dir_(std::move(fixture_dir)) {}
  TextResponse complete(const TextRequest& request) override;

 private:
  fs::path fixture_dir_;
};

/// Builds a well-formed quiz payload of `count` four-option questions whose
/// content is a pure function of `seed_text`.
std::string synthetic_quiz_payload(const std::string& seed_text, int count);

/// Deterministic vision mock keyed by (image digest, question text): picks
/// one of the lettered options listed in the prompt.
class HashVisionProvider : public VisionProvider {
 public:
  VisionResponse ask(const VisionRequest& request) override;
};

/// Number of lines that look like "A. option" / "B) option" in a prompt.
int count_option_lines(const std::string& text);

/// Append-only JSON-lines record of provider traffic.
class CallLog {
 public:
  explicit CallLog(fs::path path);

  void append(std::string_view kind, const std::string& digest, const std::string& response_text);
  /// (kind, digest) -> response text, read from disk.
  std::map<std::pair<std::string, std::string>, std::string> load() const;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  mutable std::mutex mutex_;
};

class RecordingTextProvider : public TextCompletionProvider {
 public:
  RecordingTextProvider(TextCompletionProvider& inner, CallLog& log) : inner_(inner), log_(log) {}
  TextResponse complete(const TextRequest& request) override;

 private:
  TextCompletionProvider& inner_;
  CallLog& log_;
};

class RecordingVisionProvider : public VisionProvider {
 public:
  RecordingVisionProvider(VisionProvider& inner, CallLog& log) : inner_(inner), log_(log) {}
  VisionResponse ask(const VisionRequest& request) override;

 private:
  VisionProvider& inner_;
  CallLog& log_;
};

/// Serves responses from a recorded CallLog; unknown requests throw.
class ReplayTextProvider : public TextCompletionProvider {
 public:
  explicit ReplayTextProvider(const CallLog& log);
  TextResponse complete(const TextRequest& request) override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

class ReplayVisionProvider : public VisionProvider {
 public:
  explicit ReplayVisionProvider(const CallLog& log);
  VisionResponse ask(const VisionRequest& request) override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

}  // namespace qzlora::providers

#pragma once

#include "qzlora/providers/providers.hpp"
#include "qzlora/util/http.hpp"

#include <nlohmann/json.hpp>

namespace qzlora::providers {

/// OpenAI-compatible chat-completions endpoint, e.g.
/// https://api.openai.com/v1/chat/completions.
struct ChatEndpoint {
  std::string url;
  std::string api_key;  // sent as a bearer token; never logged
};

nlohmann::json chat_request_body(const TextRequest& request);
nlohmann::json chat_request_body(const VisionRequest& request);
/// Extracts choices[0].message.content and usage; throws Error(ProviderFailure).
TextResponse parse_chat_response(const std::string& body);

class ChatCompletionsTextProvider : public TextCompletionProvider {
 public:
  explicit ChatCompletionsTextProvider(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  TextResponse complete(const TextRequest& request) override;

 private:
  ChatEndpoint endpoint_;
  HttpClient http_;
};

class ChatCompletionsVisionProvider : public VisionProvider {
 public:
  explicit ChatCompletionsVisionProvider(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  VisionResponse ask(const VisionRequest& request) override;

 private:
  ChatEndpoint endpoint_;
  HttpClient http_;
};

}  // namespace qzlora::providers

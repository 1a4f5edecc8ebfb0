#include "qzlora/providers/openai.hpp"

#include "qzlora/error.hpp"

namespace qzlora::providers {

nlohmann::json chat_request_body(const TextRequest& request) {
  return nlohmann::json{{"model", request.model_id},
                        {"messages",
                         {{{"role", "system"}, {"content", request.system_text}},
                          {{"role", "user"}, {"content", request.user_text}}}},
                        {"max_tokens", request.max_tokens},
                        {"temperature", request.temperature}};
}

nlohmann::json chat_request_body(const VisionRequest& request) {
  const std::string data_url = "data:" + request.media_type + ";base64," + base64_encode(request.image_bytes);
  nlohmann::json user_content = nlohmann::json::array(
      {{{"type", "text"}, {"text", request.user_text}},
       {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}});
  return nlohmann::json{{"model", request.model_id},
                        {"messages",
                         {{{"role", "system"}, {"content", request.system_text}},
                          {{"role", "user"}, {"content", user_content}}}},
                        {"temperature", 0.0}};
}

TextResponse parse_chat_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    TextResponse response;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    response.text = content.is_null() ? "" : content.get<std::string>();
    if (j.contains("usage")) {
      response.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      response.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return response;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderFailure, std::string("malformed chat response: ") + e.what());
  }
}

namespace {

std::string post_chat(const HttpClient& http, const ChatEndpoint& endpoint, const nlohmann::json& body) {
  HttpHeaders headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  HttpResponse response;
  try {
    response = http.post(endpoint.url, body.dump(), "application/json", headers);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProviderFailure, e.what());
  }
  if (response.status != 200) {
    throw Error(ErrorCode::ProviderFailure,
                "HTTP " + std::to_string(response.status) + " from " + endpoint.url);
  }
  return response.body;
}

}  // namespace

TextResponse ChatCompletionsTextProvider::complete(const TextRequest& request) {
  return parse_chat_response(post_chat(http_, endpoint_, chat_request_body(request)));
}

VisionResponse ChatCompletionsVisionProvider::ask(const VisionRequest& request) {
  return {parse_chat_response(post_chat(http_, endpoint_, chat_request_body(request))).text};
}

}  // namespace qzlora::providers

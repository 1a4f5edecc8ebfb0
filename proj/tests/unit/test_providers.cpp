#include "support/support.hpp"

#include "qzlora/error.hpp"
#include "qzlora/providers/openai.hpp"
#include "qzlora/providers/providers.hpp"
#include "qzlora/quiz/generate.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qzlora;
using namespace qzlora::providers;

namespace {

TextRequest text_request(const std::string& user) { return {"model-x", "system", user, 100, 0.0}; }

VisionRequest vision_request(const std::string& image, const std::string& prompt) {
  return {"vlm-x", "system", prompt, image, "image/png"};
}

}  // namespace

TEST_CASE("request digests depend on every field") {
  const auto base = text_request("hello");
  auto other = base;
  other.temperature = 0.5;
  CHECK(request_digest(base) == request_digest(text_request("hello")));
  CHECK(request_digest(base) != request_digest(other));
  CHECK(request_digest(vision_request("img", "q")) != request_digest(vision_request("img2", "q")));
  CHECK(request_digest(vision_request("img", "q")) != request_digest(vision_request("img", "q2")));
}

TEST_CASE("mock text provider is a pure function of the request") {
  MockTextProvider mock;
  const auto a = mock.complete(text_request("Write exactly 7 questions."));
  CHECK(a.text == mock.complete(text_request("Write exactly 7 questions.")).text);
  CHECK(a.text != mock.complete(text_request("Write exactly 7 questions!")).text);
  const auto blocks = quiz::parse_quiz_payload(a.text);
  REQUIRE(blocks.size() == 7);
  for (const auto& b : blocks) {
    REQUIRE(b.question);
    CHECK(quiz::validate_question(*b.question, 0).empty());
  }
  CHECK(quiz::parse_quiz_payload(synthetic_quiz_payload("seed", 3)).size() == 3);
}

TEST_CASE("mock text provider serves fixture files by request digest") {
  qztest::TempDir tmp;
  const auto request = text_request("anything");
  atomic_write(tmp / (request_digest(request) + ".txt"), "fixture body");
  MockTextProvider mock(tmp.get());
  CHECK(mock.complete(request).text == "fixture body");
}

TEST_CASE("hash vision mock answers one of the listed options deterministically") {
  HashVisionProvider vlm;
  const std::string prompt = "Which?\nA. one\nB. two\nC. three\n";
  CHECK(count_option_lines(prompt) == 3);
  std::set<std::string> seen;
  for (int i = 0; i < 60; ++i) {
    const auto image = "image-" + std::to_string(i);
    const auto reply = vlm.ask(vision_request(image, prompt)).text;
    CHECK(reply == vlm.ask(vision_request(image, prompt)).text);
    seen.insert(reply);
  }
  CHECK(seen == std::set<std::string>{"Answer: A", "Answer: B", "Answer: C"});
}

TEST_CASE("recorded traffic replays without the inner provider") {
  qztest::TempDir tmp;
  CallLog log(tmp / "calls/calls.jsonl");
  MockTextProvider inner_text;
  HashVisionProvider inner_vision;
  RecordingTextProvider text(inner_text, log);
  RecordingVisionProvider vision(inner_vision, log);
  const auto t = text.complete(text_request("exactly 2"));
  const auto v = vision.ask(vision_request("px", "A. x\nB. y\n"));
  CHECK(log.load().size() == 2);

  ReplayTextProvider replay_text(log);
  ReplayVisionProvider replay_vision(log);
  CHECK(replay_text.complete(text_request("exactly 2")).text == t.text);
  CHECK(replay_vision.ask(vision_request("px", "A. x\nB. y\n")).text == v.text);
  CHECK_THROWS(replay_text.complete(text_request("never recorded")));
  CHECK_THROWS(replay_vision.ask(vision_request("other", "A. x\nB. y\n")));
}

TEST_CASE("chat-completions providers against a local endpoint") {
  qztest::LocalServer server;
  nlohmann::json last_body;
  std::string last_auth;
  int failures_left = 0;
  server.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (failures_left > 0) {
      --failures_left;
      res.status = 500;
      return;
    }
    last_body = nlohmann::json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    const nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "Answer: C"}}}}}},
                               {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.start();
  const ChatEndpoint endpoint{server.url("/v1/chat/completions"), "sk-test"};

  ChatCompletionsTextProvider text(endpoint);
  const auto r = text.complete(text_request("hi"));
  CHECK(r.text == "Answer: C");
  CHECK(r.usage.prompt_tokens == 12);
  CHECK(r.usage.completion_tokens == 3);
  CHECK(last_auth == "Bearer sk-test");
  CHECK(last_body["model"] == "model-x");
  CHECK(last_body["messages"][0]["role"] == "system");
  CHECK(last_body["messages"][1]["content"] == "hi");
  CHECK(last_body["max_tokens"] == 100);

  ChatCompletionsVisionProvider vision(endpoint);
  CHECK(vision.ask(vision_request("\x89PNG", "q")).text == "Answer: C");
  const auto& content = last_body["messages"][1]["content"];
  CHECK(content[0]["text"] == "q");
  CHECK(content[1]["image_url"]["url"] == "data:image/png;base64," + base64_encode("\x89PNG"));

  failures_left = 1;
  try {
    text.complete(text_request("hi"));
    FAIL("expected ProviderFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderFailure);
    CHECK(std::string(e.what()).find("sk-test") == std::string::npos);
  }
}

TEST_CASE("malformed chat responses are ProviderFailure") {
  for (const char* body : {"not json", "{}", "{\"choices\": []}", "{\"choices\": [{\"message\": {}}]}"}) {
    try {
      parse_chat_response(body);
      FAIL("expected ProviderFailure for " << body);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProviderFailure);
    }
  }
  CHECK(parse_chat_response(R"({"choices":[{"message":{"content":null}}]})").text.empty());
}

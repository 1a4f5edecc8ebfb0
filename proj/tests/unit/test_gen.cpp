#include "support/support.hpp"

#include "qzlora/corpus/topic.hpp"
#include "qzlora/error.hpp"
#include "qzlora/gen/generate.hpp"
#include "qzlora/gen/prompts.hpp"
#include "qzlora/util/image_info.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>

using namespace qzlora;
using namespace qzlora::gen;
using selection::Condition;
using selection::Style;

namespace {

corpus::Topic gujia() {
  return corpus::TopicRegistry(qztest::synthetic_dir() / "registry.json").get("gujia");
}

/// Local HTTP server speaking the image-backend contract over a stub.
struct BackendServer {
  StubImageBackend stub{"stub-sd-1.5", 32};
  qztest::LocalServer server;
  std::atomic<int> requests{0};
  std::atomic<int> fail_next{0};

  BackendServer() {
    server.server.Post("/render", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (fail_next > 0) {
        --fail_next;
        res.status = 503;
        return;
      }
      const auto [status, body] = serve_backend_request(stub, req.body);
      res.status = status;
      res.set_content(body, "application/json");
    });
    server.start();
  }
};

}  // namespace

TEST_CASE("Gujia prompts reproduce the published realistic and illustration prompts") {
  const auto templates = TemplateSet::load(qztest::config_dir() / "prompts.ini");
  const auto topic = gujia();

  const auto realistic = build_prompts(topic, Style::Realistic, templates);
  CHECK(realistic.positive ==
        "Generate the image of Gujhia (also known as gujiya, gujia, gughara, pedakiya, purukiya, karanji, "
        "kajjikayalu, somas, or karjikayi), a sweet deep-fried pastry popular in the Indian subcontinent, "
        "realistic food photography, high resolution, detailed textures, natural lighting, shallow depth of "
        "field, several gujhias arranged neatly on a red plate, stainless steel or ceramic red plate.");
  CHECK(realistic.negative ==
        "illustration, drawing, painting, vector art, cartoon, flat colors, low quality, blurry, CGI, 3D render, "
        "fake texture, plastic look, overexposed, underexposed, watermark, text");

  const auto illustration = build_prompts(topic, Style::Illustration, templates);
  CHECK(illustration.positive ==
        "Generate the image of Gujhia (also known as gujiya, gujia, gughara, pedakiya, purukiya, karanji, "
        "kajjikayalu, somas, or karjikayi), a sweet deep-fried pastry popular in the Indian subcontinent, "
        "vector illustration, flat colors, bold clean lines, simplified texture, smooth shading, 2D drawing, "
        "food illustration style, minimalistic background.");
  CHECK(illustration.negative ==
        "realistic, photorealistic, photo, natural lighting, shadows, depth of field, glossy surface, crisp "
        "texture, CGI, 3D render, high contrast, overexposed, underexposed, watermark, text");
}

TEST_CASE("prompts use the category suffix, fall back to the default, and need a negative list") {
  const auto templates = TemplateSet::parse(
      "[realistic]\nsuffix = photo\nsuffix_Architecture = architectural photo\nnegative = cartoon , blurry\n"
      "[illustration]\nsuffix = drawing\n");
  auto topic = qztest::topic("stepwell");
  topic.summary_sentence = "A stepwell is a well.";
  topic.category = corpus::Category::Architecture;
  CHECK(build_prompts(topic, Style::Realistic, templates) ==
        PromptPair{"Generate the image of A stepwell is a well, architectural photo.", "cartoon, blurry",
                   Style::Realistic});
  topic.category = corpus::Category::Art;
  CHECK(build_prompts(topic, Style::Realistic, templates).positive ==
        "Generate the image of A stepwell is a well, photo.");
  try {
    build_prompts(topic, Style::Illustration, templates);
    FAIL("expected MissingTemplate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTemplate);
  }
}

TEST_CASE("backend request JSON contract") {
  BackendRequest r{"pos", "neg", 42};
  auto j = to_json(r);
  CHECK_FALSE(j.contains("lora_tag"));
  CHECK(j["steps"] == 30);
  CHECK(j["width"] == 512);
  r.lora_tag = "qzlora-top-15";
  j = to_json(r);
  CHECK(j["lora_tag"] == "qzlora-top-15");
  CHECK(j["lora_weight"] == 1.0);
  CHECK(backend_request_from_json(j) == r);

  for (const char* bad : {R"({"negative":"n","seed":1})", R"({"positive":"","seed":1})",
                          R"({"positive":"p"})", R"({"positive":"p","seed":-1})",
                          R"({"positive":"p","seed":1,"width":0})", R"({"positive":3,"seed":1})"}) {
    INFO(bad);
    CHECK_THROWS_AS(backend_request_from_json(nlohmann::json::parse(bad)), std::invalid_argument);
  }
}

TEST_CASE("stub backend is deterministic and sensitive to every field") {
  StubImageBackend stub("stub", 32);
  BackendRequest r{"pos", "neg", 1};
  const auto a = stub.render(r);
  CHECK(a.image == stub.render(r).image);
  CHECK(sniff_image(a.image)->width == 32);
  auto other = r;
  other.seed = 2;
  CHECK(stub.render(other).image != a.image);
  other = r;
  other.lora_tag = "x";
  CHECK(stub.render(other).image != a.image);
  CHECK(stub.render(other).metadata["lora_tag"] == "x");
}

TEST_CASE("backend service: identical responses, HTTP 400 on malformed requests, lora_tag echo") {
  BackendServer backend;
  HttpClient client;
  BackendRequest r{"pos", "neg", 5};
  r.lora_tag = "gujia-top-15";
  const auto body = to_json(r).dump();
  const auto first = client.post(backend.server.url("/render"), body, "application/json");
  const auto second = client.post(backend.server.url("/render"), body, "application/json");
  CHECK(first.status == 200);
  CHECK(first.body == second.body);
  const auto response = backend_response_from_json(nlohmann::json::parse(first.body));
  CHECK(response.metadata["lora_tag"] == "gujia-top-15");
  CHECK(sniff_image(response.image));

  const auto missing = client.post(backend.server.url("/render"), R"({"negative":"n","seed":1})", "application/json");
  CHECK(missing.status == 400);
  CHECK(nlohmann::json::parse(missing.body).contains("error"));
  CHECK(client.post(backend.server.url("/render"), "{{{", "application/json").status == 400);
}

TEST_CASE("HTTP backend client retries and maps failures to BackendUnavailable") {
  BackendServer backend;
  HttpImageBackend http(backend.server.url("/render"), "sd-1.5", RetryPolicy::immediate(3));
  BackendRequest r{"pos", "neg", 9};
  backend.fail_next = 2;
  const auto out = http.render(r);
  CHECK(out.image == backend.stub.render(r).image);
  CHECK(backend.requests == 3);

  backend.fail_next = 5;
  try {
    http.render(r);
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
  HttpImageBackend down("http://127.0.0.1:1/render", "sd-1.5", RetryPolicy::immediate(2));
  CHECK_THROWS_AS(down.render(r), Error);
}

TEST_CASE("generate_samples: seeds, records, LoRA tags and errors") {
  qztest::TempDir tmp;
  GenerationStore store(tmp / "generated");
  StubImageBackend stub;
  const auto topic = gujia();
  const auto templates = TemplateSet::load(qztest::config_dir() / "prompts.ini");
  const auto prompts = build_prompts(topic, Style::Realistic, templates);

  GenerateOptions options;
  options.store = &store;
  const auto none = Condition::parse("no-lora/realistic");
  const auto samples = generate_samples(topic, none, prompts, stub, options);
  REQUIRE(samples.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(samples[i].seed == derive_generation_seed("gujia", "no-lora/realistic", i));
    CHECK(samples[i].seed == sha256_u64("gujia|no-lora/realistic|" + std::to_string(i)));
    CHECK(samples[i].gen_id == "gujia.no-lora.realistic." + std::to_string(i));
    CHECK(fs::exists(store.image_path(samples[i])));
    CHECK_FALSE(samples[i].lora_tag);
  }
  CHECK(store.load_records("gujia", none) == samples);
  CHECK(generate_samples(topic, none, prompts, stub, options) == samples);

  options.seeds = std::vector<std::uint64_t>{1, 2};
  options.n = 2;
  CHECK(generate_samples(topic, none, prompts, stub, options)[1].seed == 2);
  options.n = 3;
  CHECK_THROWS_AS(generate_samples(topic, none, prompts, stub, options), std::invalid_argument);
  options.seeds.reset();
  options.n = 0;
  CHECK_THROWS_AS(generate_samples(topic, none, prompts, stub, options), std::invalid_argument);
  options.n = 2;

  const auto lora = Condition::parse("qzlora-top-15/realistic");
  try {
    generate_samples(topic, lora, prompts, stub, options);
    FAIL("expected MissingLoRA");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingLoRA);
  }
  atomic_write(tmp / "models/qzlora-top-15.safetensors", "weights");
  options.lora_model_path = tmp / "models/qzlora-top-15.safetensors";
  const auto with_lora = generate_samples(topic, lora, prompts, stub, options);
  CHECK(with_lora[0].lora_tag == "qzlora-top-15");
  CHECK(with_lora[0].image_hash != samples[0].image_hash);

  auto expect_invalid = [&](const char* label) {
    try {
      generate_samples(topic, Condition::parse(label), prompts, stub, options);
      FAIL("expected InvalidCondition for " << label);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidCondition);
    }
  };
  expect_invalid("real-top-5/realistic");
  expect_invalid("qzlora-top-15/illustration");  // prompts are realistic
}

TEST_CASE("undecodable backend output is rejected") {
  qztest::TempDir tmp;
  GenerationStore store(tmp / "generated");
  CHECK_THROWS_AS(store.put_image("garbage"), Error);
  CHECK_THROWS_AS(store.load_records("t", Condition::parse("no-lora/realistic")), Error);
}

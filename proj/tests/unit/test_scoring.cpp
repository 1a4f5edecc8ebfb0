#include "support/support.hpp"

#include "qzlora/error.hpp"
#include "qzlora/scoring/parse_answer.hpp"
#include "qzlora/scoring/scorer.hpp"
#include "qzlora/util/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <fstream>

using namespace qzlora;
using namespace qzlora::scoring;

namespace {

/// Index of the quiz question whose stem appears in the prompt.
int question_in(const quiz::Quiz& q, const std::string& prompt) {
  for (std::size_t i = 0; i < q.questions.size(); ++i) {
    if (prompt.find(q.questions[i].stem) != std::string::npos) return int(i);
  }
  return -1;
}

std::string letter(int index) { return std::string(1, char('A' + index)); }

ScoreOptions quiet_options() {
  ScoreOptions o;
  o.clock = Clock::fixed();
  o.retry = RetryPolicy::immediate(3);
  return o;
}

}  // namespace

TEST_CASE("parser agrees with every hand-labeled response") {
  std::map<std::string, std::string> labels;
  std::ifstream label_file(qztest::test_data_dir() / "answers/labels.tsv");
  std::string line;
  while (std::getline(label_file, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    labels[line.substr(0, tab)] = line.substr(tab + 1);
  }
  std::ifstream responses(qztest::test_data_dir() / "answers/responses.jsonl");
  int checked = 0;
  while (std::getline(responses, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto id = j.at("id").get<std::string>();
    const auto text = j.at("text").get<std::string>();
    const auto got = parse_answer(text, j.at("options").get<int>());
    const std::string got_label = got ? letter(*got) : "-";
    INFO(id << ": " << text);
    REQUIRE(labels.count(id));
    CHECK(got_label == labels[id]);
    ++checked;
  }
  CHECK(checked >= 50);
  CHECK(checked == int(labels.size()));
}

TEST_CASE("parser examples") {
  CHECK(parse_answer("Answer: B.", 4) == 1);
  CHECK(parse_answer("The best choice is (c) because...", 4) == 2);
  CHECK(parse_answer("E", 4) == std::nullopt);
  CHECK(parse_answer("E", 5) == 4);
  CHECK_THROWS_AS(parse_answer("A", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_answer("A", 7), std::invalid_argument);
}

TEST_CASE("parser is total over random strings") {
  CounterRng rng(2024);
  const std::string alphabet = "ABCDEFGabcdefg()[]*`.:,;!?- \n\tanswer option choice is 0123456789\"'\x80\xff";
  for (int i = 0; i < 100000; ++i) {
    std::string s(rng.bounded(40), ' ');
    for (char& c : s) c = alphabet[rng.bounded(alphabet.size())];
    const int options = 2 + int(rng.bounded(5));
    const auto got = parse_answer(s, options);
    if (got) REQUIRE((*got >= 0 && *got < options));
  }
}

TEST_CASE("score_image: always-correct, out-of-range and hash-keyed mocks") {
  const auto q = qztest::quiz(8);
  const auto image = qztest::png(32, 32);

  providers::FunctionVisionProvider correct([&](const providers::VisionRequest& r) {
    return providers::VisionResponse{"Answer: " + letter(q.questions[question_in(q, r.user_text)].correct_index)};
  });
  const auto perfect = score_image("s1", image, q, correct, quiet_options());
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.verdicts.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(perfect.verdicts[i].question_index == i);

  providers::FunctionVisionProvider always_e([](const providers::VisionRequest&) {
    return providers::VisionResponse{"E"};
  });
  const auto zero = score_image("s1", image, q, always_e, quiet_options());
  CHECK(zero.accuracy == 0.0);
  for (const auto& v : zero.verdicts) CHECK_FALSE(v.chosen_index);

  // Correct iff the image digest ends in an even hex digit.
  auto even = [](const std::string& bytes) { return std::stoi(sha256_hex(bytes).substr(63), nullptr, 16) % 2 == 0; };
  providers::FunctionVisionProvider keyed([&](const providers::VisionRequest& r) {
    const int c = q.questions[question_in(q, r.user_text)].correct_index;
    return providers::VisionResponse{"Answer: " + letter(even(r.image_bytes) ? c : (c + 1) % 4)};
  });
  std::string even_img;
  std::string odd_img;
  for (std::uint8_t shade = 0; even_img.empty() || odd_img.empty(); ++shade) {
    const auto candidate = qztest::png(16, 16, shade);
    (even(candidate) ? even_img : odd_img) = candidate;
  }
  CHECK(score_image("even", even_img, q, keyed, quiet_options()).accuracy == 1.0);
  CHECK(score_image("odd", odd_img, q, keyed, quiet_options()).accuracy == 0.0);
}

TEST_CASE("score_image sends one request per question, image attached") {
  const auto q = qztest::quiz(5);
  const auto image = qztest::png(20, 20);
  std::vector<int> order;
  providers::FunctionVisionProvider vlm([&](const providers::VisionRequest& r) {
    CHECK(r.image_bytes == image);
    CHECK(r.media_type == "image/png");
    order.push_back(question_in(q, r.user_text));
    return providers::VisionResponse{"A"};
  });
  const auto rec = score_image("s", image, q, vlm, quiet_options());
  CHECK(order == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(rec.accuracy * 5 == double(rec.correct_count()));
  CHECK(rec.correct_count() == 2);  // answers cycle A..D; A is right for questions 0 and 4
}

TEST_CASE("undecodable images and persistent provider failures") {
  const auto q = qztest::quiz(3);
  providers::HashVisionProvider vlm;
  try {
    score_image("bad", "not an image", q, vlm, quiet_options());
    FAIL("expected UndecodableImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndecodableImage);
  }

  qztest::TempDir tmp;
  ScoreStore store(tmp / "scores");
  auto options = quiet_options();
  options.store = &store;
  int calls = 0;
  providers::FunctionVisionProvider flaky([&](const providers::VisionRequest&) -> providers::VisionResponse {
    if (++calls > 2) throw std::runtime_error("timeout");
    return {"A"};
  });
  const auto image = qztest::png(8, 8);
  try {
    score_image("s", image, q, flaky, options);
    FAIL("expected ProviderFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderFailure);
  }
  CHECK(calls == 5);  // two answers, then three attempts at question 2
  CHECK_FALSE(store.lookup(q.quiz_id, sha256_hex(image), options.model_id, "s"));
}

TEST_CASE("score store keys by model and subject and keeps records byte-identical") {
  qztest::TempDir tmp;
  ScoreStore store(tmp / "scores");
  const auto q = qztest::quiz(4);
  providers::HashVisionProvider vlm;
  auto options = quiet_options();
  options.store = &store;
  const auto image = qztest::png(8, 8);
  const auto rec = score_image("s", image, q, vlm, options);
  CHECK(fs::exists(store.path_for(q.quiz_id, rec.subject_hash)));
  const auto hit = store.lookup(q.quiz_id, rec.subject_hash, options.model_id, "s");
  REQUIRE(hit);
  CHECK(*hit == rec);
  CHECK(canonical_json(to_json(*hit)) == canonical_json(to_json(rec)));
  CHECK_FALSE(store.lookup(q.quiz_id, rec.subject_hash, "other-model", "s"));
  CHECK_FALSE(store.lookup(q.quiz_id, rec.subject_hash, options.model_id, "other-subject"));

  // Same bytes under a second subject id get their own record in the same file.
  score_image("s2", image, q, vlm, options);
  CHECK(read_json(store.path_for(q.quiz_id, rec.subject_hash)).size() == 2);
  CHECK(score_record_from_json(to_json(rec)) == rec);
}

TEST_CASE("score_batch: cache hits, order, parallelism and per-subject errors") {
  qztest::TempDir tmp;
  const auto q = qztest::quiz(6);
  std::vector<SubjectRef> subjects;
  for (int i = 0; i < 10; ++i) subjects.push_back({"img-" + std::to_string(i), {}, qztest::png(24, 24, std::uint8_t(i))});

  std::atomic<int> calls{0};
  providers::HashVisionProvider hash;
  providers::FunctionVisionProvider counting([&](const providers::VisionRequest& r) {
    ++calls;
    return hash.ask(r);
  });

  auto run = [&](const fs::path& dir, std::size_t parallelism) {
    ScoreStore store(dir);
    auto options = quiet_options();
    options.store = &store;
    return score_batch(subjects, q, counting, options, parallelism);
  };
  const auto serial = run(tmp / "a", 1);
  CHECK(calls == 60);
  const auto parallel = run(tmp / "b", 8);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].subject_id == "img-" + std::to_string(i));
    REQUIRE(serial[i].record);
    CHECK(*serial[i].record == *parallel[i].record);
  }
  CHECK(tree_digest(tmp / "a") == tree_digest(tmp / "b"));

  calls = 0;
  const auto cached = run(tmp / "a", 8);
  CHECK(calls == 0);
  for (std::size_t i = 0; i < cached.size(); ++i) {
    CHECK(cached[i].from_cache);
    CHECK(*cached[i].record == *serial[i].record);
  }

  std::vector<SubjectRef> mixed{subjects[0], {"broken", {}, Bytes("not an image")}, subjects[1]};
  const auto out = score_batch(mixed, q, hash, quiet_options(), 3);
  REQUIRE(out.size() == 3);
  CHECK(out[0].record);
  CHECK_FALSE(out[1].record);
  CHECK(out[1].error == ErrorCode::UndecodableImage);
  CHECK(out[2].record);
  CHECK(out[2].subject_id == "img-1");
}

TEST_CASE("vision prompt lists the options with letters") {
  const auto templates = VisionPromptTemplates::load(qztest::config_dir());
  CHECK(templates.question_template == VisionPromptTemplates::defaults().question_template);
  quiz::Question question{"What  color?", {"red", "blue", "green"}, 0, quiz::FocusAttribute::Color};
  const auto prompt = build_question_prompt(templates, question);
  CHECK(prompt.find("What color?") != std::string::npos);
  CHECK(prompt.find("A. red\nB. blue\nC. green") != std::string::npos);
  CHECK(prompt.find("A, B or C") != std::string::npos);
  CHECK(providers::count_option_lines(prompt) == 3);
}

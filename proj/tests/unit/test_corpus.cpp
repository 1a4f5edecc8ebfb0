#include "support/support.hpp"

#include "qzlora/corpus/source.hpp"
#include "qzlora/corpus/store.hpp"
#include "qzlora/corpus/topic.hpp"
#include "qzlora/error.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <mutex>
#include <set>

using namespace qzlora;
using namespace qzlora::corpus;

namespace {

/// In-memory source: entry i serves a distinct 256x256 PNG.
class MemorySource : public ImageSource {
 public:
  explicit MemorySource(int files) {
    for (int i = 0; i < files; ++i) {
      entries_.push_back({"mem:" + std::to_string(i), "file " + std::to_string(i)});
      bytes_["mem:" + std::to_string(i)] = qztest::png(256, 256, std::uint8_t(i));
    }
  }
  std::vector<SourceEntry> list(const Topic&) override { return entries_; }
  std::optional<Bytes> fetch(const SourceEntry& e) override {
    std::lock_guard lock(mutex_);
    ++fetches;
    auto it = bytes_.find(e.url);
    if (it == bytes_.end()) return std::nullopt;
    return it->second;
  }
  std::vector<SourceEntry> entries_;
  std::map<std::string, Bytes> bytes_;
  std::size_t fetches = 0;
  std::mutex mutex_;
};

std::set<std::string> hashes(const std::vector<CandidateImage>& images) {
  std::set<std::string> out;
  for (const auto& c : images) out.insert(c.content_hash);
  return out;
}

}  // namespace

TEST_CASE("eligibility thresholds hold at the exact boundaries") {
  const auto t = [](std::uint64_t views) { return qztest::topic("x", views); };
  CHECK(check_eligibility(t(5999), 30).eligible());
  CHECK_FALSE(check_eligibility(t(6000), 30).eligible());
  CHECK(check_eligibility(t(6000), 30).reasons == std::vector{IneligibleReason::TooPopular});
  CHECK_FALSE(check_eligibility(t(5999), 29).eligible());
  CHECK(check_eligibility(t(5999), 29).reasons == std::vector{IneligibleReason::TooFewImages});
  CHECK(check_eligibility(t(6000), 29).reasons.size() == 2);
  CHECK(check_eligibility(t(0), 1000).eligible());
}

TEST_CASE("topic registry validates, deduplicates and persists") {
  qztest::TempDir tmp;
  TopicRegistry reg(tmp / "registry.json");
  const Topic bluebird = qztest::topic("mountain-bluebird", 2000, {"eastern-bluebird"});
  CHECK(reg.register_topic(bluebird) == bluebird);
  CHECK(reg.register_topic(bluebird) == bluebird);  // identical re-registration is a no-op
  Topic changed = bluebird;
  changed.monthly_views = 10;
  try {
    reg.register_topic(changed);
    FAIL("expected DuplicateTopic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateTopic);
  }

  Topic bad = qztest::topic("Not A Slug");
  CHECK_THROWS_AS(reg.register_topic(bad), Error);
  bad = qztest::topic("selfish", 1, {"selfish"});
  CHECK_FALSE(topic_violations(bad).empty());
  bad = qztest::topic("empty");
  bad.summary_sentence = "  ";
  CHECK_FALSE(topic_violations(bad).empty());
  bad = qztest::topic("many", 1, {"a", "b", "c", "d", "e", "f"});
  CHECK_FALSE(topic_violations(bad).empty());

  TopicRegistry reopened(tmp / "registry.json");
  CHECK(reopened.get("mountain-bluebird") == bluebird);
  CHECK_FALSE(reopened.find("nope"));
  try {
    reopened.get("nope");
    FAIL("expected UnknownTopic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTopic);
  }
}

TEST_CASE("fetch caps at 55 stored images in listing order") {
  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  MemorySource source(80);
  const auto result = store.fetch_candidates(qztest::topic("cap"), source);
  REQUIRE(result.images.size() == 55);
  CHECK(result.available_count == 80);
  for (std::uint32_t i = 0; i < 55; ++i) {
    CHECK(result.images[i].fetch_index == i);
    CHECK(result.images[i].source_url == "mem:" + std::to_string(i));
  }
  CHECK(result.images[7].image_id == "cap-007");

  MemorySource small(10);
  CHECK(store.fetch_candidates(qztest::topic("small"), small).images.size() == 10);
}

TEST_CASE("re-running ingestion on an unchanged source downloads nothing") {
  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  MemorySource source(40);
  const auto first = store.fetch_candidates(qztest::topic("rerun"), source);
  CHECK(first.downloaded == 40);
  const auto before_fetches = source.fetches;
  const auto before_tree = tree_digest(store.topic_dir("rerun"));
  const auto second = store.fetch_candidates(qztest::topic("rerun"), source);
  CHECK(second.downloaded == 0);
  CHECK(source.fetches == before_fetches);
  CHECK(hashes(second.images) == hashes(first.images));
  CHECK(tree_digest(store.topic_dir("rerun")) == before_tree);
}

TEST_CASE("ingesting the bundled synthetic topics skips unusable entries") {
  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  LocalDirectorySource source(qztest::synthetic_dir() / "source");
  TopicRegistry reg(qztest::synthetic_dir() / "registry.json");

  const auto gujia = store.fetch_candidates(reg.get("gujia"), source);
  CHECK(gujia.images.size() == 10);
  CHECK(gujia.available_count == 14);
  std::set<std::string> reasons;
  for (const auto& s : gujia.skipped) reasons.insert(s.reason.substr(0, s.reason.find(' ')));
  CHECK(reasons == std::set<std::string>{"below", "missing", "unsupported"});
  std::set<ImageFormat> formats;
  for (const auto& c : gujia.images) formats.insert(c.format);
  CHECK(formats.size() == 3);

  const auto stepwell = store.fetch_candidates(reg.get("stepwell"), source);
  CHECK(stepwell.images.size() == 10);
  CHECK(stepwell.available_count == 15);
  CHECK(store.available_count("stepwell") == 15);

  const auto loaded = store.load_corpus("gujia");
  REQUIRE(loaded.size() == 10);
  for (const auto& c : loaded) {
    CHECK_FALSE(c.corrupt);
    CHECK(sha256_hex(store.read_image(c)) == c.content_hash);
  }
  CHECK(read_file(store.topic_dir("gujia") / loaded[0].caption_file_name()) == loaded[0].caption);
}

TEST_CASE("a tampered stored image is reported corrupt and refetched") {
  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  MemorySource source(5);
  store.fetch_candidates(qztest::topic("tamper"), source);
  auto images = store.load_corpus("tamper");
  atomic_write(store.image_path(images[2]), "garbage");
  images = store.load_corpus("tamper");
  CHECK(images[2].corrupt);
  CHECK_FALSE(images[1].corrupt);

  const auto again = store.fetch_candidates(qztest::topic("tamper"), source);
  CHECK(again.downloaded == 1);
  for (const auto& c : store.load_corpus("tamper")) CHECK_FALSE(c.corrupt);
}

TEST_CASE("duplicate bytes and an empty listing") {
  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  MemorySource source(3);
  source.entries_.push_back({"mem:dup", ""});
  source.bytes_["mem:dup"] = source.bytes_["mem:1"];
  const auto r = store.fetch_candidates(qztest::topic("dups"), source);
  CHECK(r.images.size() == 3);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason == "duplicate of dups-001");

  MemorySource none(0);
  try {
    store.fetch_candidates(qztest::topic("none"), none);
    FAIL("expected NoImagesFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoImagesFound);
  }
  try {
    store.load_corpus("never");
    FAIL("expected UnknownTopic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTopic);
  }
}

TEST_CASE("Commons source follows continuation against a local API mock") {
  qztest::LocalServer server;
  std::string base;
  std::vector<std::string> titles_seen;
  server.server.Get("/w/api.php", [&](const httplib::Request& req, httplib::Response& res) {
    titles_seen.push_back(req.get_param_value("gcmtitle"));
    nlohmann::json page;
    const bool second = req.has_param("gcmcontinue");
    auto file = [&](int i, int index) {
      return nlohmann::json{
          {"index", index},
          {"imageinfo",
           {{{"url", base + "/files/" + std::to_string(i) + ".png"},
             {"extmetadata", {{"ImageDescription", {{"value", "<b>Bird</b> &amp; tree " + std::to_string(i)}}}}}}}}};
    };
    if (!second) {
      // Out of order within the batch; "index" restores the listing order.
      page["query"]["pages"] = {file(1, 2), file(0, 1)};
      page["continue"] = {{"gcmcontinue", "page2"}};
    } else {
      page["query"]["pages"] = {file(2, 3)};
    }
    res.set_content(page.dump(), "application/json");
  });
  server.server.Get(R"(/files/(\d+)\.png)", [](const httplib::Request& req, httplib::Response& res) {
    res.set_content(qztest::png(300, 300, std::uint8_t(std::stoi(req.matches[1]))), "image/png");
  });
  server.start();
  base = server.url();

  CommonsSource::Options options;
  options.api_endpoint = server.url("/w/api.php");
  options.retry = RetryPolicy::immediate(2);
  CommonsSource source(options);
  Topic t = qztest::topic("mountain-bluebird");
  t.wiki_url = "https://en.wikipedia.org/wiki/Mountain_bluebird";
  const auto entries = source.list(t);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].url == base + "/files/0.png");
  CHECK(entries[1].url == base + "/files/1.png");
  CHECK(entries[0].description == "Bird & tree 0");
  REQUIRE(titles_seen.size() == 2);
  CHECK(titles_seen[0] == "Category:Mountain bluebird");

  qztest::TempDir tmp;
  CorpusStore store(tmp / "corpus");
  FetchOptions fo;
  fo.retry = RetryPolicy::immediate(2);
  const auto r = store.fetch_candidates(t, source, fo);
  CHECK(r.images.size() == 3);
  CHECK(r.images[2].caption == "Bird & tree 2");

  CHECK(CommonsSource::article_title("https://en.wikipedia.org/wiki/Chandrakala_%28sweet%29") ==
        "Chandrakala (sweet)");
}

TEST_CASE("Commons listing failure is SourceUnavailable") {
  qztest::LocalServer server;
  server.server.Get("/w/api.php", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  server.start();
  CommonsSource::Options options;
  options.api_endpoint = server.url("/w/api.php");
  options.retry = RetryPolicy::immediate(2);
  CommonsSource source(options);
  try {
    source.list(qztest::topic("down"));
    FAIL("expected SourceUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SourceUnavailable);
  }
}

TEST_CASE("markup stripping and UTF-8 truncation") {
  CHECK(strip_markup("<p>A <i>blue</i>\n bird&nbsp;&lt;3</p>") == "A blue bird <3");
  CHECK(truncate_utf8("h\xC3\xA9llo", 2) == "h\xC3\xA9");
  CHECK(truncate_utf8("abc", 10) == "abc");
}

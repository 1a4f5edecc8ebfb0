#include "oracles/oracles.hpp"
#include "support/support.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/digest.hpp"
#include "qzlora/util/fs.hpp"
#include "qzlora/util/http.hpp"
#include "qzlora/util/image_info.hpp"
#include "qzlora/util/png_writer.hpp"
#include "qzlora/util/retry.hpp"
#include "qzlora/util/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qzlora;

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_u64("abc") == 0xba7816bf8f01cfeaULL);
}

TEST_CASE("base64 round-trips and matches RFC 4648 vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  std::string all;
  for (int i = 0; i < 256; ++i) all.push_back(char(i));
  CHECK(base64_decode(base64_encode(all)) == all);
}

TEST_CASE("url_encode keeps only unreserved characters") {
  CHECK(url_encode("Category:Gujia (sweet)") == "Category%3AGujia%20%28sweet%29");
  CHECK(url_encode("a-b_c.d~e") == "a-b_c.d~e");
}

TEST_CASE("Url::parse splits scheme, host, port and target") {
  const Url u = Url::parse("https://api.example.com/v1/chat?x=1");
  CHECK(u.scheme == "https");
  CHECK(u.host == "api.example.com");
  CHECK(u.port == 443);
  CHECK(u.target == "/v1/chat?x=1");
  CHECK(Url::parse("http://127.0.0.1:8080").target == "/");
  CHECK(Url::parse("http://127.0.0.1:8080").port == 8080);
  CHECK_THROWS_AS(Url::parse("ftp://x"), std::invalid_argument);
  CHECK_THROWS_AS(Url::parse("not a url"), std::invalid_argument);
}

TEST_CASE("CounterRng reproduces the reference SplitMix64 stream") {
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 0xDEADBEEFULL, ~0ULL}) {
    oracle::SplitMix64 reference{seed};
    CounterRng rng(seed);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.next() == reference.next());
    CHECK(CounterRng(seed).at(999) == rng.at(999));
  }
  // First output for seed 0 of the published SplitMix64 generator.
  CHECK(CounterRng(0).next() == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("CounterRng bounded draws stay in range and uniform() is in [0, 1)") {
  CounterRng rng(42);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.bounded(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("sniff_image identifies PNG, JPEG and WebP headers") {
  const auto png = qztest::png(300, 257);
  const auto info = sniff_image(png);
  REQUIRE(info);
  CHECK(info->format == ImageFormat::Png);
  CHECK(info->width == 300);
  CHECK(info->height == 257);

  const auto dir = qztest::synthetic_dir() / "source" / "gujia";
  const auto jpg = sniff_image(read_file(dir / "gujia_01.jpg"));
  REQUIRE(jpg);
  CHECK(jpg->format == ImageFormat::Jpeg);
  CHECK(jpg->width >= 256);
  const auto webp = sniff_image(read_file(dir / "gujia_02.webp"));
  REQUIRE(webp);
  CHECK(webp->format == ImageFormat::WebP);
  CHECK(webp->height >= 256);

  CHECK_FALSE(sniff_image(read_file(dir / "animation.gif")));
  CHECK_FALSE(sniff_image("hello world"));
  CHECK_FALSE(sniff_image(png.substr(0, 20)));
  CHECK(extension(ImageFormat::Jpeg) == "jpg");
  CHECK(media_type(ImageFormat::WebP) == "image/webp");
}

TEST_CASE("noise PNG is a pure function of seed and size") {
  const auto a = render_noise_png(5, 64, 64);
  CHECK(a == render_noise_png(5, 64, 64));
  CHECK(a != render_noise_png(6, 64, 64));
  const auto info = sniff_image(a);
  REQUIRE(info);
  CHECK(info->width == 64);
}

TEST_CASE("atomic_write, canonical_json and tree_digest") {
  qztest::TempDir tmp;
  atomic_write(tmp / "a/b/c.txt", "hello");
  CHECK(read_file(tmp / "a/b/c.txt") == "hello");
  CHECK_THROWS_AS(read_file(tmp / "missing"), Error);

  const nlohmann::json j = {{"b", 1}, {"a", {{"z", 2}, {"y", 3}}}};
  CHECK(canonical_json(j) == "{\"a\":{\"y\":3,\"z\":2},\"b\":1}\n");

  const auto before = tree_digest(tmp.get());
  CHECK(before == tree_digest(tmp.get()));
  atomic_write(tmp / "a/d.txt", "x");
  const auto added = tree_digest(tmp.get());
  CHECK(added != before);
  atomic_write(tmp / "a/d.txt", "y");
  CHECK(tree_digest(tmp.get()) != added);
  CHECK(relative_to(tmp / "a/b/../d.txt", tmp.get()) == "a/d.txt");
}

TEST_CASE("with_retry retries until success and rethrows the last failure") {
  int calls = 0;
  const int v = with_retry(RetryPolicy::immediate(3), [&] {
    if (++calls < 3) throw std::runtime_error("transient");
    return 9;
  });
  CHECK(v == 9);
  CHECK(calls == 3);
  calls = 0;
  CHECK_THROWS_WITH(with_retry(RetryPolicy::immediate(2), [&]() -> int {
                      ++calls;
                      throw std::runtime_error("down");
                    }),
                    "down");
  CHECK(calls == 2);
}

TEST_CASE("HttpClient talks to a local server and reports refused connections") {
  qztest::LocalServer server;
  server.server.Get("/ping", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("pong", "text/plain");
  });
  server.server.Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
    res.status = 201;
    res.set_content(req.body, "application/json");
  });
  server.start();
  HttpClient client;
  const auto r = client.get(server.url("/ping"));
  CHECK(r.status == 200);
  CHECK(r.body == "pong");
  const auto p = client.post(server.url("/echo"), "{\"x\":1}", "application/json");
  CHECK(p.status == 201);
  CHECK(p.body == "{\"x\":1}");
  CHECK(client.get(server.url("/nope")).status == 404);
  CHECK_THROWS_AS(HttpClient("t", std::chrono::seconds{2}).get("http://127.0.0.1:1/"), TransportError);
}

#pragma once

#include "qzlora/corpus/topic.hpp"
#include "qzlora/quiz/quiz.hpp"
#include "qzlora/util/fs.hpp"
#include "qzlora/util/png_writer.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <sys/wait.h>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace qztest {

using qzlora::fs::path;

inline path source_dir() { return QZ_SOURCE_DIR; }
inline path test_data_dir() { return QZ_TEST_DATA_DIR; }
inline path synthetic_dir() { return source_dir() / "data" / "synthetic"; }
inline path config_dir() { return source_dir() / "config"; }
inline std::string cli_path() { return QZ_CLI_PATH; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "qz") {
    std::random_device rd;
    for (;;) {
      path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
      if (std::filesystem::create_directories(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const path& get() const { return path_; }
  path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  path path_;
};

/// Solid-color PNG of the given size; distinct shades give distinct bytes.
inline std::string png(std::uint32_t w, std::uint32_t h, std::uint8_t shade = 100) {
  std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3, shade);
  return qzlora::encode_png_rgb(rgb, w, h);
}

inline qzlora::corpus::Topic topic(const std::string& id, std::uint64_t views = 1000,
                                   std::vector<std::string> distractors = {}) {
  qzlora::corpus::Topic t;
  t.topic_id = id;
  t.wiki_url = "https://en.wikipedia.org/wiki/" + id;
  t.summary_sentence = "The " + id + " is a test subject with a distinctive look.";
  t.category = qzlora::corpus::Category::Biology;
  t.monthly_views = views;
  t.distractor_ids = std::move(distractors);
  return t;
}

/// Four-option questions whose answer letters cycle A, B, C, D.
inline qzlora::quiz::Quiz quiz(int questions, const std::string& topic_id = "subject") {
  qzlora::quiz::Quiz q;
  q.topic_id = topic_id;
  q.generator_model_id = "mock";
  for (int i = 0; i < questions; ++i) {
    qzlora::quiz::Question question;
    question.stem = "Question " + std::to_string(i) + " about the " + topic_id + "?";
    for (int o = 0; o < 4; ++o) question.options.push_back("option " + std::to_string(i) + "." + std::to_string(o));
    question.correct_index = i % 4;
    q.questions.push_back(question);
  }
  q.quiz_id = qzlora::quiz::compute_quiz_id(q);
  return q;
}

/// httplib server on an ephemeral localhost port, served from a thread.
class LocalServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url(const std::string& target = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + target;
  }

 private:
  int port_ = 0;
  std::thread thread_;
};

/// Runs a shell command and returns its exit status.
inline int run(const std::string& command) {
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace qztest

#pragma once

#include "qzlora/corpus/topic.hpp"
#include "qzlora/util/http.hpp"
#include "qzlora/util/retry.hpp"

#include <atomic>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::corpus {

struct SourceEntry {
  std::string url;
  std::string description;
};

/// Where candidate images come from. Listing order defines fetch order.
class ImageSource {
 public:
  virtual ~ImageSource() = default;

  /// Throws Error(SourceUnavailable) when the listing cannot be retrieved.
  virtual std::vector<SourceEntry> list(const Topic& topic) = 0;

  /// Image bytes; nullopt when the file is gone (404 or missing). Transient
  /// failures throw and are retried by the caller.
  virtual std::optional<Bytes> fetch(const SourceEntry& entry) = 0;
};

/// Test and offline source:
///
///   <root>/<topic_id>/listing.json   {"files": [{"file": "a.png", "description": "..."}]}
///   <root>/<topic_id>/<file>
///
/// Entry URLs are "local:<topic_id>/<file>" so stores do not depend on where
/// the directory lives.
class LocalDirectorySource : public ImageSource {
 public:
  explicit LocalDirectorySource(fs::path root);

  std::vector<SourceEntry> list(const Topic& topic) override;
  std::optional<Bytes> fetch(const SourceEntry& entry) override;

  std::size_t fetch_count() const { return fetches_.load(); }

 private:
  fs::path root_;
  std::atomic<std::size_t> fetches_{0};
};

/// Wikimedia Commons: files of `Category:<article title>` through the
/// MediaWiki query API (generator=categorymembers, prop=imageinfo), with
/// continuation. Descriptions come from the ImageDescription extmetadata
/// field with markup stripped.
class CommonsSource : public ImageSource {
 public:
  struct Options {
    std::string api_endpoint = "https://commons.wikimedia.org/w/api.php";
    std::string user_agent = "qzlora/1.0 (image curation research pipeline)";
    std::size_t page_size = 50;
    std::size_t max_entries = 500;
    RetryPolicy retry;
  };

  explicit CommonsSource(Options options);

  std::vector<SourceEntry> list(const Topic& topic) override;
  std::optional<Bytes> fetch(const SourceEntry& entry) override;

  /// "https://en.wikipedia.org/wiki/Mountain_bluebird" -> "Mountain bluebird".
  static std::string article_title(const std::string& wiki_url);

 private:
  Options options_;
  HttpClient http_;
};

/// Drops HTML tags, decodes the common entities and collapses whitespace.
std::string strip_markup(const std::string& html);

/// Truncates to at most `max_chars` UTF-8 code points.
std::string truncate_utf8(const std::string& text, std::size_t max_chars);

}  // namespace qzlora::corpus

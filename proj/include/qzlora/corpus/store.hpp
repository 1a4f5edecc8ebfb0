#pragma once

#include "qzlora/corpus/source.hpp"
#include "qzlora/corpus/topic.hpp"
#include "qzlora/util/image_info.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qzlora::corpus {

struct CandidateImage {
  std::string image_id;  // "<topic_id>-<fetch_index, 3 digits>"
  std::string topic_id;
  std::string content_hash;  // sha256 hex of the stored bytes
  std::string source_url;
  std::string caption;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t fetch_index = 0;
  ImageFormat format = ImageFormat::Png;
  /// Set by load_corpus when the stored bytes no longer match content_hash.
  bool corrupt = false;

  std::string file_name() const;
  std::string caption_file_name() const;
};

struct SkippedEntry {
  std::string source_url;
  std::string reason;
};

struct FetchOptions {
  std::size_t cap = 55;
  std::size_t parallelism = 4;
  std::uint32_t min_width = 256;
  std::uint32_t min_height = 256;
  std::size_t caption_limit = 512;
  RetryPolicy retry;
};

struct FetchResult {
  std::vector<CandidateImage> images;
  std::size_t available_count = 0;  // entries in the source listing
  std::size_t downloaded = 0;       // files actually transferred this run
  std::vector<SkippedEntry> skipped;
};

/// Content-addressed candidate store:
///
///   <root>/<topic_id>/<index>.<ext>     image bytes
///   <root>/<topic_id>/<index>.txt       caption (may be empty)
///   <root>/<topic_id>/manifest.json     index with hashes
///
/// The cap counts stored images; skipped listing entries do not use a slot.
class CorpusStore {
 public:
  explicit CorpusStore(fs::path root);

  /// Throws SourceUnavailable or NoImagesFound.
  FetchResult fetch_candidates(const Topic& topic, ImageSource& source, const FetchOptions& options = {});

  /// Sorted by fetch_index; hash mismatches come back with corrupt = true.
  /// Throws UnknownTopic if the topic was never ingested.
  std::vector<CandidateImage> load_corpus(const std::string& topic_id) const;

  /// Number of listing entries seen at ingestion time.
  std::size_t available_count(const std::string& topic_id) const;

  fs::path topic_dir(const std::string& topic_id) const { return root_ / topic_id; }
  fs::path manifest_path(const std::string& topic_id) const { return topic_dir(topic_id) / "manifest.json"; }
  fs::path image_path(const CandidateImage& image) const;
  Bytes read_image(const CandidateImage& image) const;

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
};

nlohmann::json to_json(const CandidateImage& image);
CandidateImage candidate_from_json(const nlohmann::json& j);

}  // namespace qzlora::corpus

#include "qzlora/corpus/store.hpp"

#include "qzlora/error.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>

namespace qzlora::corpus {
namespace {

std::string pad3(std::uint32_t n) {
  std::string s = std::to_string(n);
  return s.size() >= 3 ? s : std::string(3 - s.size(), '0') + s;
}

ImageFormat parse_format(const std::string& ext) {
  if (ext == "png") return ImageFormat::Png;
  if (ext == "jpg") return ImageFormat::Jpeg;
  if (ext == "webp") return ImageFormat::WebP;
  throw Error(ErrorCode::StoreError, "unknown image format '" + ext + "'");
}

// Reasons that depend only on the bytes behind a URL; a re-run skips them
// without downloading again.
bool is_permanent(const std::string& reason) { return reason.rfind("missing", 0) != 0; }

}  // namespace

std::string CandidateImage::file_name() const {
  return pad3(fetch_index) + "." + std::string(extension(format));
}

std::string CandidateImage::caption_file_name() const { return pad3(fetch_index) + ".txt"; }

nlohmann::json to_json(const CandidateImage& image) {
  return nlohmann::json{{"image_id", image.image_id},       {"topic_id", image.topic_id},
                        {"content_hash", image.content_hash}, {"source_url", image.source_url},
                        {"caption", image.caption},           {"width", image.width},
                        {"height", image.height},             {"fetch_index", image.fetch_index},
                        {"format", extension(image.format)}};
}

CandidateImage candidate_from_json(const nlohmann::json& j) {
  CandidateImage c;
  c.image_id = j.at("image_id").get<std::string>();
  c.topic_id = j.at("topic_id").get<std::string>();
  c.content_hash = j.at("content_hash").get<std::string>();
  c.source_url = j.at("source_url").get<std::string>();
  c.caption = j.value("caption", "");
  c.width = j.at("width").get<std::uint32_t>();
  c.height = j.at("height").get<std::uint32_t>();
  c.fetch_index = j.at("fetch_index").get<std::uint32_t>();
  c.format = parse_format(j.at("format").get<std::string>());
  return c;
}

CorpusStore::CorpusStore(fs::path root) : root_(std::move(root)) {}

fs::path CorpusStore::image_path(const CandidateImage& image) const {
  return topic_dir(image.topic_id) / image.file_name();
}

Bytes CorpusStore::read_image(const CandidateImage& image) const { return read_file(image_path(image)); }

FetchResult CorpusStore::fetch_candidates(const Topic& topic, ImageSource& source, const FetchOptions& options) {
  if (options.cap < 1) throw Error(ErrorCode::InvalidTopic, "fetch cap must be at least 1");
  const std::vector<SourceEntry> listing = source.list(topic);
  if (listing.empty()) throw Error(ErrorCode::NoImagesFound, topic.topic_id + ": source lists no files");

  // What a previous run already established.
  std::map<std::string, CandidateImage> reusable;
  std::map<std::string, std::string> known_skips;
  if (fs::exists(manifest_path(topic.topic_id))) {
    const nlohmann::json previous = read_json(manifest_path(topic.topic_id));
    for (const auto& item : previous.value("images", nlohmann::json::array())) {
      CandidateImage c = candidate_from_json(item);
      const fs::path path = image_path(c);
      if (fs::exists(path) && sha256_hex(read_file(path)) == c.content_hash) reusable.emplace(c.source_url, c);
    }
    for (const auto& item : previous.value("skipped", nlohmann::json::array())) {
      const std::string reason = item.at("reason").get<std::string>();
      if (is_permanent(reason)) known_skips.emplace(item.at("source_url").get<std::string>(), reason);
    }
  }

  FetchResult result;
  result.available_count = listing.size();
  std::set<std::string> stored_hashes;
  std::map<std::string, std::string> hash_owner;
  const std::size_t parallelism = std::max<std::size_t>(1, options.parallelism);

  auto download = [&](const SourceEntry& entry) -> std::optional<Bytes> {
    try {
      return with_retry(options.retry, [&] { return source.fetch(entry); });
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SourceUnavailable, entry.url + ": " + e.what());
    }
  };

  std::size_t next = 0;
  while (next < listing.size() && result.images.size() < options.cap) {
    // A window never holds more entries than free slots, so a sequential run
    // and a parallel run look at the same entries.
    const std::size_t window = std::min({parallelism, options.cap - result.images.size(), listing.size() - next});
    std::vector<std::future<std::optional<Bytes>>> pending(window);
    std::vector<std::optional<Bytes>> payloads(window);
    for (std::size_t w = 0; w < window; ++w) {
      const SourceEntry& entry = listing[next + w];
      if (known_skips.count(entry.url)) continue;
      if (auto it = reusable.find(entry.url); it != reusable.end()) {
        payloads[w] = read_image(it->second);
        continue;
      }
      pending[w] = std::async(std::launch::async, download, std::cref(entry));
      ++result.downloaded;
    }
    for (std::size_t w = 0; w < window; ++w) {
      if (pending[w].valid()) payloads[w] = pending[w].get();
    }

    for (std::size_t w = 0; w < window; ++w) {
      const SourceEntry& entry = listing[next + w];
      if (auto it = known_skips.find(entry.url); it != known_skips.end()) {
        result.skipped.push_back({entry.url, it->second});
        continue;
      }
      if (!payloads[w]) {
        result.skipped.push_back({entry.url, "missing at source"});
        continue;
      }
      const Bytes& bytes = *payloads[w];
      const auto info = sniff_image(bytes);
      if (!info) {
        result.skipped.push_back({entry.url, "unsupported format"});
        continue;
      }
      if (info->width < options.min_width || info->height < options.min_height) {
        result.skipped.push_back({entry.url, "below minimum resolution (" + std::to_string(info->width) + "x" +
                                                 std::to_string(info->height) + ")"});
        continue;
      }
      const std::string hash = sha256_hex(bytes);
      if (auto owner = hash_owner.find(hash); owner != hash_owner.end()) {
        result.skipped.push_back({entry.url, "duplicate of " + owner->second});
        continue;
      }

      CandidateImage c;
      c.topic_id = topic.topic_id;
      c.fetch_index = static_cast<std::uint32_t>(result.images.size());
      c.image_id = topic.topic_id + "-" + pad3(c.fetch_index);
      c.content_hash = hash;
      c.source_url = entry.url;
      c.caption = truncate_utf8(entry.description, options.caption_limit);
      c.width = info->width;
      c.height = info->height;
      c.format = info->format;

      const fs::path path = image_path(c);
      if (!fs::exists(path) || sha256_hex(read_file(path)) != hash) atomic_write(path, bytes);
      const fs::path caption_path = topic_dir(topic.topic_id) / c.caption_file_name();
      if (!fs::exists(caption_path) || read_file(caption_path) != c.caption) atomic_write(caption_path, c.caption);

      hash_owner.emplace(hash, c.image_id);
      result.images.push_back(std::move(c));
    }
    next += window;
  }

  if (result.images.empty()) {
    throw Error(ErrorCode::NoImagesFound, topic.topic_id + ": no listed file passed the filters");
  }

  // Drop files left over from an earlier run with a different outcome.
  std::set<std::string> keep{"manifest.json"};
  for (const auto& c : result.images) {
    keep.insert(c.file_name());
    keep.insert(c.caption_file_name());
  }
  for (const auto& entry : fs::directory_iterator(topic_dir(topic.topic_id))) {
    if (entry.is_regular_file() && !keep.count(entry.path().filename().string())) fs::remove(entry.path());
  }

  nlohmann::json manifest{{"topic_id", topic.topic_id},
                          {"cap", options.cap},
                          {"available_count", result.available_count},
                          {"images", nlohmann::json::array()},
                          {"skipped", nlohmann::json::array()}};
  for (const auto& c : result.images) manifest["images"].push_back(to_json(c));
  for (const auto& s : result.skipped) {
    manifest["skipped"].push_back({{"source_url", s.source_url}, {"reason", s.reason}});
  }
  atomic_write(manifest_path(topic.topic_id), pretty_json(manifest));
  return result;
}

std::vector<CandidateImage> CorpusStore::load_corpus(const std::string& topic_id) const {
  if (!fs::exists(manifest_path(topic_id))) throw Error(ErrorCode::UnknownTopic, topic_id + " has no corpus");
  const nlohmann::json manifest = read_json(manifest_path(topic_id));
  std::vector<CandidateImage> images;
  for (const auto& item : manifest.at("images")) {
    CandidateImage c = candidate_from_json(item);
    const fs::path path = image_path(c);
    c.corrupt = !fs::exists(path) || sha256_hex(read_file(path)) != c.content_hash;
    images.push_back(std::move(c));
  }
  std::sort(images.begin(), images.end(),
            [](const CandidateImage& a, const CandidateImage& b) { return a.fetch_index < b.fetch_index; });
  return images;
}

std::size_t CorpusStore::available_count(const std::string& topic_id) const {
  if (!fs::exists(manifest_path(topic_id))) throw Error(ErrorCode::UnknownTopic, topic_id + " has no corpus");
  return read_json(manifest_path(topic_id)).at("available_count").get<std::size_t>();
}

}  // namespace qzlora::corpus

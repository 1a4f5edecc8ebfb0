#include "qzlora/corpus/source.hpp"

#include "qzlora/error.hpp"

#include <algorithm>
#include <cctype>

namespace qzlora::corpus {

LocalDirectorySource::LocalDirectorySource(fs::path root) : root_(std::move(root)) {}

std::vector<SourceEntry> LocalDirectorySource::list(const Topic& topic) {
  const fs::path listing = root_ / topic.topic_id / "listing.json";
  if (!fs::exists(listing)) {
    throw Error(ErrorCode::SourceUnavailable, "no listing at " + listing.string());
  }
  std::vector<SourceEntry> entries;
  const nlohmann::json doc = read_json(listing);
  for (const auto& item : doc.at("files")) {
    entries.push_back({"local:" + topic.topic_id + "/" + item.at("file").get<std::string>(),
                       item.value("description", "")});
  }
  return entries;
}

std::optional<Bytes> LocalDirectorySource::fetch(const SourceEntry& entry) {
  ++fetches_;
  constexpr std::string_view kPrefix = "local:";
  if (entry.url.rfind(kPrefix, 0) != 0) return std::nullopt;
  const fs::path path = root_ / entry.url.substr(kPrefix.size());
  if (!fs::exists(path)) return std::nullopt;
  return read_file(path);
}

CommonsSource::CommonsSource(Options options) : options_(std::move(options)), http_(options_.user_agent) {}

std::string CommonsSource::article_title(const std::string& wiki_url) {
  std::string title = wiki_url;
  if (const auto slash = title.rfind('/'); slash != std::string::npos) title = title.substr(slash + 1);
  if (const auto cut = title.find_first_of("?#"); cut != std::string::npos) title.resize(cut);
  std::string decoded;
  for (std::size_t i = 0; i < title.size(); ++i) {
    if (title[i] == '%' && i + 2 < title.size()) {
      decoded.push_back(char(std::stoi(title.substr(i + 1, 2), nullptr, 16)));
      i += 2;
    } else {
      decoded.push_back(title[i] == '_' ? ' ' : title[i]);
    }
  }
  return decoded;
}

std::vector<SourceEntry> CommonsSource::list(const Topic& topic) {
  const std::string category = "Category:" + article_title(topic.wiki_url);
  std::vector<SourceEntry> entries;
  std::string cont;
  do {
    std::string url = options_.api_endpoint +
                      "?action=query&format=json&formatversion=2&generator=categorymembers"
                      "&gcmtype=file&gcmtitle=" + url_encode(category) +
                      "&gcmlimit=" + std::to_string(options_.page_size) +
                      "&prop=imageinfo&iiprop=url%7Cextmetadata&iiextmetadatafilter=ImageDescription";
    if (!cont.empty()) url += "&gcmcontinue=" + url_encode(cont);

    HttpResponse response;
    try {
      response = with_retry(options_.retry, [&] {
        HttpResponse r = http_.get(url);
        if (r.status >= 500 || r.status == 429) throw TransportError("HTTP " + std::to_string(r.status));
        return r;
      });
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SourceUnavailable, std::string("Commons listing: ") + e.what());
    }
    if (response.status != 200) {
      throw Error(ErrorCode::SourceUnavailable, "Commons listing HTTP " + std::to_string(response.status));
    }
    nlohmann::json page;
    try {
      page = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SourceUnavailable, std::string("Commons listing not JSON: ") + e.what());
    }

    // With formatversion=2 pages arrive as an array; the generator does not
    // guarantee order, so "index" restores listing order within a batch.
    std::vector<std::pair<long, SourceEntry>> batch;
    if (page.contains("query")) {
      for (const auto& p : page["query"].value("pages", nlohmann::json::array())) {
        if (!p.contains("imageinfo") || p["imageinfo"].empty()) continue;
        const auto& info = p["imageinfo"][0];
        std::string description;
        if (info.contains("extmetadata") && info["extmetadata"].contains("ImageDescription")) {
          description = strip_markup(info["extmetadata"]["ImageDescription"].value("value", ""));
        }
        batch.emplace_back(p.value("index", 0L), SourceEntry{info.value("url", ""), description});
      }
    }
    std::stable_sort(batch.begin(), batch.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [index, entry] : batch) {
      if (!entry.url.empty()) entries.push_back(std::move(entry));
    }
    cont = page.contains("continue") ? page["continue"].value("gcmcontinue", "") : "";
  } while (!cont.empty() && entries.size() < options_.max_entries);
  if (entries.size() > options_.max_entries) entries.resize(options_.max_entries);
  return entries;
}

std::optional<Bytes> CommonsSource::fetch(const SourceEntry& entry) {
  HttpResponse r = http_.get(entry.url);
  if (r.status == 404 || r.status == 410) return std::nullopt;
  if (r.status != 200) throw TransportError("HTTP " + std::to_string(r.status) + " for " + entry.url);
  return std::move(r.body);
}

std::string strip_markup(const std::string& html) {
  std::string text;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') {
      in_tag = true;
      text.push_back(' ');
    } else if (c == '>') {
      in_tag = false;
    } else if (!in_tag) {
      text.push_back(c);
    }
  }
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&nbsp;", " "}};
  for (const auto& [from, to] : kEntities) {
    for (std::size_t pos = 0; (pos = text.find(from, pos)) != std::string::npos; pos += to.size()) {
      text.replace(pos, from.size(), to);
    }
  }
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string truncate_utf8(const std::string& text, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto byte = static_cast<unsigned char>(text[i]);
    if ((byte & 0xC0) != 0x80) {  // first byte of a code point
      if (chars == max_chars) return text.substr(0, i);
      ++chars;
    }
  }
  return text;
}

}  // namespace qzlora::corpus

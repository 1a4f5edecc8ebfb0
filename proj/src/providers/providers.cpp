#include "qzlora/providers/providers.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>

namespace qzlora::providers {

std::string request_digest(const TextRequest& request) {
  const nlohmann::json j{{"kind", "text"},
                         {"model_id", request.model_id},
                         {"system_text", request.system_text},
                         {"user_text", request.user_text},
                         {"max_tokens", request.max_tokens},
                         {"temperature", request.temperature}};
  return sha256_hex(j.dump());
}

std::string request_digest(const VisionRequest& request) {
  const nlohmann::json j{{"kind", "vision"},
                         {"model_id", request.model_id},
                         {"system_text", request.system_text},
                         {"user_text", request.user_text},
                         {"image_digest", sha256_hex(request.image_bytes)},
                         {"media_type", request.media_type}};
  return sha256_hex(j.dump());
}

namespace {

int requested_count(const std::string& text) {
  const std::string key = "exactly ";
  if (auto pos = text.find(key); pos != std::string::npos) {
    pos += key.size();
    int n = 0;
    bool any = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      n = n * 10 + (text[pos++] - '0');
      any = true;
      if (n > 1000) break;
    }
    if (any && n > 0) return n;
  }
  return 10;
}

}  // namespace

std::string synthetic_quiz_payload(const std::string& seed_text, int count) {
  static const char* kAttributes[] = {"color", "shape", "texture", "size", "material", "pattern", "context"};
  static const char* kParts[] = {"outer surface", "edge", "upper part", "base", "overall outline", "markings"};
  static const char* kWords[] = {"blue",   "gray",    "crescent", "round",  "smooth", "ridged", "glossy",
                                 "matte",  "striped", "spotted",  "small",  "large",  "golden", "pale",
                                 "angular", "curved", "woven",    "carved", "flaky",  "dense"};
  constexpr std::uint64_t kWordCount = std::size(kWords);
  CounterRng rng(sha256_u64(seed_text));
  std::ostringstream out;
  for (int q = 0; q < count; ++q) {
    const char* attribute = kAttributes[rng.bounded(std::size(kAttributes))];
    const char* part = kParts[rng.bounded(std::size(kParts))];
    out << "Question: Which " << attribute << " best describes the " << part << " of the subject? (item "
        << q + 1 << ")\n";
    // Four distinct words: a random offset walk over the pool.
    std::uint64_t start = rng.bounded(kWordCount);
    const std::uint64_t step = 1 + rng.bounded(4);
    for (int o = 0; o < 4; ++o) {
      out << char('A' + o) << ". " << kWords[(start + o * step) % kWordCount] << "\n";
    }
    out << "Answer: " << char('A' + rng.bounded(4)) << "\n";
    out << "Attribute: " << attribute << "\n\n";
  }
  return out.str();
}

TextResponse MockTextProvider::complete(const TextRequest& request) {
  const std::string digest = request_digest(request);
  if (!fixture_dir_.empty()) {
    const fs::path fixture = fixture_dir_ / (digest + ".txt");
    if (fs::exists(fixture)) return {read_file(fixture), {}};
  }
  return {synthetic_quiz_payload(digest, requested_count(request.user_text)), {}};
}

int count_option_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos || i + 1 >= line.size()) continue;
    const char c = line[i];
    const char d = line[i + 1];
    if (c == 'A' + count && (d == '.' || d == ')')) ++count;
  }
  return count;
}

VisionResponse HashVisionProvider::ask(const VisionRequest& request) {
  const int options = count_option_lines(request.user_text);
  if (options < 1) return {"I cannot find any answer options."};
  const std::uint64_t key = sha256_u64(sha256_hex(request.image_bytes) + "\n" + sha256_hex(request.user_text));
  return {"Answer: " + std::string(1, char('A' + key % std::uint64_t(options)))};
}

CallLog::CallLog(fs::path path) : path_(std::move(path)) {}

void CallLog::append(std::string_view kind, const std::string& digest, const std::string& response_text) {
  const nlohmann::json entry{{"kind", kind}, {"request_digest", digest}, {"response", response_text}};
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << entry.dump() << "\n";
}

std::map<std::pair<std::string, std::string>, std::string> CallLog::load() const {
  std::lock_guard lock(mutex_);
  std::map<std::pair<std::string, std::string>, std::string> entries;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    entries[{j.at("kind").get<std::string>(), j.at("request_digest").get<std::string>()}] =
        j.at("response").get<std::string>();
  }
  return entries;
}

TextResponse RecordingTextProvider::complete(const TextRequest& request) {
  TextResponse response = inner_.complete(request);
  log_.append("text", request_digest(request), response.text);
  return response;
}

VisionResponse RecordingVisionProvider::ask(const VisionRequest& request) {
  VisionResponse response = inner_.ask(request);
  log_.append("vision", request_digest(request), response.text);
  return response;
}

ReplayTextProvider::ReplayTextProvider(const CallLog& log) : entries_(log.load()) {}

TextResponse ReplayTextProvider::complete(const TextRequest& request) {
  const auto it = entries_.find({"text", request_digest(request)});
  if (it == entries_.end()) throw Error(ErrorCode::ProviderFailure, "request not in replay log");
  return {it->second, {}};
}

ReplayVisionProvider::ReplayVisionProvider(const CallLog& log) : entries_(log.load()) {}

VisionResponse ReplayVisionProvider::ask(const VisionRequest& request) {
  const auto it = entries_.find({"vision", request_digest(request)});
  if (it == entries_.end()) throw Error(ErrorCode::ProviderFailure, "request not in replay log");
  return {it->second};
}

}  // namespace qzlora::providers

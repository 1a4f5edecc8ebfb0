#include "qzlora/util/fs.hpp"

#include "qzlora/error.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

namespace qzlora {

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StoreError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& path, std::string_view data) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter.fetch_add(1);
  const fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StoreError, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::StoreError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string canonical_json(const nlohmann::json& j) { return j.dump() + "\n"; }

std::string pretty_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json(const fs::path& path) {
  const Bytes text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::StoreError, path.string() + ": " + e.what());
  }
}

std::string tree_digest(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> entries;
  if (fs::exists(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      entries.emplace_back(fs::relative(entry.path(), root).generic_string(),
                           sha256_hex(read_file(entry.path())));
    }
  }
  std::sort(entries.begin(), entries.end());
  std::string listing;
  for (const auto& [name, digest] : entries) {
    listing += name;
    listing += '\0';
    listing += digest;
    listing += '\n';
  }
  return sha256_hex(listing);
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return p.lexically_normal().lexically_relative(base.lexically_normal()).generic_string();
}

}  // namespace qzlora

#pragma once

#include "qzlora/util/digest.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace qzlora {

namespace fs = std::filesystem;

/// Reads a whole file. Throws Error(StoreError) if it cannot be opened.
Bytes read_file(const fs::path& path);

/// Writes `data` to a sibling temp file and renames it over `path`.
/// Parent directories are created as needed.
void atomic_write(const fs::path& path, std::string_view data);

/// Canonical JSON text: sorted keys, compact, newline-terminated.
std::string canonical_json(const nlohmann::json& j);

/// Human-readable but deterministic JSON text (sorted keys, 2-space indent).
std::string pretty_json(const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);

/// Digest over every regular file below `root`: sorted relative paths and
/// their content digests. Equal trees give equal digests.
std::string tree_digest(const fs::path& root);

/// Lexically normal path relative to `base` when `p` lies inside it.
std::string relative_to(const fs::path& p, const fs::path& base);

}  // namespace qzlora

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace nbrepro::corpus {

// Canonical form used for identity: lowercase scheme and host, no
// credentials, query, fragment, trailing slash or ".git" suffix. Absolute
// and ./-relative filesystem paths become file:// URLs. nullopt when the
// input is not a URL.
std::optional<std::string> normalize_url(std::string_view url);

bool is_file_url(std::string_view normalized);
std::string file_url_path(std::string_view normalized);

// 16 hex chars of sha256(normalized URL); stable across runs.
std::string repository_id_for(std::string_view normalized_url);
// 16 hex chars of sha256(repository_id '\0' relative_path).
std::string notebook_id_for(std::string_view repository_id, std::string_view relative_path);
// Fresh random token per call.
std::string new_run_id();

} // namespace nbrepro::corpus

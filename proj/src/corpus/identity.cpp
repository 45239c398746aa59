#include "nbrepro/corpus/identity.hpp"

#include "nbrepro/util/hash.hpp"
#include "nbrepro/util/text.hpp"

#include <filesystem>
#include <regex>

namespace nbrepro::corpus {

namespace fs = std::filesystem;

std::optional<std::string> normalize_url(std::string_view raw) {
    const std::string input(util::trim(raw));
    if (input.empty()) return std::nullopt;

    if (input.front() == '/' || input.rfind("./", 0) == 0 || input.rfind("../", 0) == 0) {
        auto path = fs::absolute(fs::path(input)).lexically_normal().generic_string();
        while (path.size() > 1 && path.back() == '/') path.pop_back();
        return "file://" + path;
    }

    static const std::regex url_re(R"(^([A-Za-z][A-Za-z0-9+.-]*)://(?:[^@/?#\s]*@)?([^/?#\s:]*)(:[0-9]+)?([^?#\s]*)(?:\?[^#\s]*)?(?:#\S*)?$)");
    std::smatch m;
    if (!std::regex_match(input, m, url_re)) return std::nullopt;
    const auto scheme = util::to_lower(m[1].str());
    if (scheme != "http" && scheme != "https" && scheme != "git" && scheme != "ssh" && scheme != "file")
        return std::nullopt;
    const auto host = util::to_lower(m[2].str());
    std::string path = m[4].str();

    if (scheme == "file") {
        if (!host.empty() && host != "localhost") return std::nullopt;
        if (path.empty()) return std::nullopt;
        auto p = fs::path(path).lexically_normal().generic_string();
        while (p.size() > 1 && p.back() == '/') p.pop_back();
        return "file://" + p;
    }

    if (host.empty() || (host.find('.') == std::string::npos && host != "localhost")) return std::nullopt;
    while (!path.empty() && path.back() == '/') path.pop_back();
    if (path.size() > 4 && path.compare(path.size() - 4, 4, ".git") == 0) path.resize(path.size() - 4);
    while (!path.empty() && path.back() == '/') path.pop_back();
    if (path.empty()) return std::nullopt;
    // Owner and repository names are case-insensitive on the major forge.
    if (host == "github.com" || host == "www.github.com") return scheme + "://github.com" + util::to_lower(path);
    return scheme + "://" + host + m[3].str() + path;
}

bool is_file_url(std::string_view normalized) { return normalized.rfind("file://", 0) == 0; }

std::string file_url_path(std::string_view normalized) {
    return is_file_url(normalized) ? std::string(normalized.substr(7)) : std::string(normalized);
}

std::string repository_id_for(std::string_view normalized_url) { return util::sha256_hex(normalized_url).substr(0, 16); }

std::string notebook_id_for(std::string_view repository_id, std::string_view relative_path) {
    std::string key(repository_id);
    key.push_back('\0');
    key += relative_path;
    return util::sha256_hex(key).substr(0, 16);
}

std::string new_run_id() { return util::random_hex_token(16); }

} // namespace nbrepro::corpus

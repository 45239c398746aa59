#include "nbrepro/depinfer/requirements.hpp"

#include "nbrepro/depinfer/python_lexer.hpp"
#include "nbrepro/util/text.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

namespace nbrepro::depinfer {

using util::trim;

std::string_view to_string(RequirementOrigin origin) {
    switch (origin) {
    case RequirementOrigin::DeclaredRequirements: return "DeclaredRequirements";
    case RequirementOrigin::DeclaredSetup: return "DeclaredSetup";
    case RequirementOrigin::DeclaredNotebookInstall: return "DeclaredNotebookInstall";
    case RequirementOrigin::InferredImport: return "InferredImport";
    }
    return "InferredImport";
}

std::optional<RequirementOrigin> origin_from_string(std::string_view text) {
    for (auto o : {RequirementOrigin::DeclaredRequirements, RequirementOrigin::DeclaredSetup,
                   RequirementOrigin::DeclaredNotebookInstall, RequirementOrigin::InferredImport})
        if (to_string(o) == text) return o;
    return std::nullopt;
}

std::string PackageRequirement::to_line() const {
    if (opaque_line) return *opaque_line;
    std::string line = distribution_name + extras + version_constraint.value_or("");
    if (!marker.empty()) line += "; " + marker;
    return line;
}

std::string normalize_distribution_name(std::string_view name) {
    std::string out;
    bool pending_sep = false;
    for (char c : name) {
        if (c == '-' || c == '_' || c == '.') {
            pending_sep = !out.empty();
            continue;
        }
        if (pending_sep) out.push_back('-');
        pending_sep = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

namespace {

const std::regex& name_re() {
    static const std::regex re(R"(^([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(\[[^\]]*\])?\s*(.*)$)");
    return re;
}

const std::regex& constraint_re() {
    static const std::regex re(
        R"(^(~=|===|==|!=|<=|>=|<|>)\s*[A-Za-z0-9.*+!_-]+(\s*,\s*(~=|===|==|!=|<=|>=|<|>)\s*[A-Za-z0-9.*+!_-]+)*$)");
    return re;
}

std::string strip_whitespace(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

// "#egg=name" fragment, else the last path component with archive/VCS suffixes removed.
std::string name_from_location(std::string_view location) {
    if (auto egg = location.find("#egg="); egg != std::string_view::npos) {
        auto name = location.substr(egg + 5);
        name = name.substr(0, name.find_first_of("&"));
        return normalize_distribution_name(name);
    }
    auto path = location.substr(0, location.find_first_of("#?"));
    if (auto at = path.rfind('@'); at != std::string_view::npos && path.find("://") != std::string_view::npos &&
                                   at > path.find("://") + 3 && path.find('/', at) == std::string_view::npos)
        path = path.substr(0, at); // vcs revision pin
    while (!path.empty() && path.back() == '/') path.remove_suffix(1);
    auto slash = path.find_last_of('/');
    auto base = slash == std::string_view::npos ? path : path.substr(slash + 1);
    for (std::string_view suffix : {".git", ".zip", ".tar.gz", ".tgz", ".tar.bz2"}) {
        if (base.size() > suffix.size() && base.substr(base.size() - suffix.size()) == suffix) {
            base.remove_suffix(suffix.size());
            break;
        }
    }
    if (base.size() > 4 && base.substr(base.size() - 4) == ".whl") {
        base.remove_suffix(4);
        base = base.substr(0, base.find('-'));
    } else if (auto dash = base.find_last_of('-'); dash != std::string_view::npos && dash + 1 < base.size() &&
                                                   std::isdigit(static_cast<unsigned char>(base[dash + 1]))) {
        base = base.substr(0, dash); // sdist name-version
    }
    if (base == "." || base.empty()) return {};
    return normalize_distribution_name(base);
}

bool looks_like_location(std::string_view s) {
    static constexpr std::string_view vcs[] = {"git+", "hg+", "svn+", "bzr+"};
    for (auto p : vcs)
        if (s.substr(0, p.size()) == p) return true;
    if (s.find("://") != std::string_view::npos) return true;
    if (s.front() == '.' || s.front() == '/' || s.front() == '~') return true;
    for (std::string_view ext : {".whl", ".tar.gz", ".zip", ".tgz"})
        if (s.size() > ext.size() && s.substr(s.size() - ext.size()) == ext) return true;
    return false;
}

PackageRequirement opaque(std::string name, std::string line, RequirementOrigin origin, std::string_view source) {
    PackageRequirement req;
    req.distribution_name = std::move(name);
    req.opaque_line = std::move(line);
    req.origin = origin;
    req.source = std::string(source);
    return req;
}

// Strips pip's inline comment: '#' at line start or after whitespace.
std::string_view strip_comment(std::string_view line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) return line.substr(0, i);
    }
    return line;
}

// Per-requirement options (--hash=..., --install-option) follow the specifier.
std::string_view strip_trailing_options(std::string_view line) {
    for (std::size_t i = 1; i + 2 < line.size(); ++i) {
        if (std::isspace(static_cast<unsigned char>(line[i])) && line[i + 1] == '-' && line[i + 2] == '-')
            return trim(line.substr(0, i));
    }
    return line;
}

} // namespace

std::optional<PackageRequirement> parse_requirement_spec(std::string_view spec, RequirementOrigin origin,
                                                         std::string_view source) {
    spec = trim(spec);
    if (spec.empty()) return std::nullopt;

    if (spec.substr(0, 3) == "-e " || spec.substr(0, 11) == "--editable ") {
        auto target = trim(spec.substr(spec.find(' ')));
        auto name = name_from_location(target);
        if (name.empty()) return std::nullopt;
        return opaque(std::move(name), std::string(spec), origin, source);
    }
    if (spec.front() == '-') return std::nullopt;

    // PEP 508 direct reference: name @ url
    if (auto at = spec.find(" @ "); at != std::string_view::npos || spec.find("@ ") != std::string_view::npos) {
        if (at == std::string_view::npos) at = spec.find("@ ");
        auto head = trim(spec.substr(0, at));
        head = head.substr(0, head.find('['));
        std::smatch m;
        std::string head_str(head);
        if (std::regex_match(head_str, m, name_re()) && m[3].length() == 0)
            return opaque(normalize_distribution_name(m[1].str()), std::string(spec), origin, source);
        return std::nullopt;
    }

    if (looks_like_location(spec)) {
        auto name = name_from_location(spec);
        if (name.empty()) return std::nullopt;
        return opaque(std::move(name), std::string(spec), origin, source);
    }

    std::string text(spec);
    std::smatch m;
    if (!std::regex_match(text, m, name_re())) return std::nullopt;

    PackageRequirement req;
    req.distribution_name = normalize_distribution_name(m[1].str());
    req.extras = strip_whitespace(m[2].str());
    req.origin = origin;
    req.source = std::string(source);

    std::string rest = m[3].str();
    if (auto semi = rest.find(';'); semi != std::string::npos) {
        req.marker = std::string(trim(std::string_view(rest).substr(semi + 1)));
        rest.resize(semi);
    }
    std::string constraint = strip_whitespace(rest);
    if (constraint.size() >= 2 && constraint.front() == '(' && constraint.back() == ')')
        constraint = constraint.substr(1, constraint.size() - 2);
    if (!constraint.empty()) {
        if (!std::regex_match(constraint, constraint_re())) return std::nullopt;
        req.version_constraint = constraint;
    }
    return req;
}

ManifestParse parse_requirements_manifest(std::string_view text, std::string_view source) {
    ManifestParse result;

    // Join backslash continuations first.
    std::vector<std::string> logical;
    std::string pending;
    for (auto& raw : util::split_lines(text)) {
        std::string_view line(raw);
        if (!line.empty() && line.back() == '\\') {
            pending += std::string(line.substr(0, line.size() - 1));
            continue;
        }
        logical.push_back(pending + std::string(line));
        pending.clear();
    }
    if (!pending.empty()) logical.push_back(pending);

    for (const auto& full : logical) {
        auto line = trim(strip_comment(full));
        if (line.empty()) continue;
        const bool editable = line.substr(0, 3) == "-e " || line.substr(0, 11) == "--editable ";
        if (line.front() == '-' && !editable) {
            result.warnings.push_back(std::string(source) + ": skipped option line '" + std::string(line) + "'");
            continue;
        }
        auto spec = editable ? line : strip_trailing_options(line);
        if (auto req = parse_requirement_spec(spec, RequirementOrigin::DeclaredRequirements, source))
            result.requirements.push_back(std::move(*req));
        else
            result.warnings.push_back(std::string(source) + ": unparseable requirement '" + std::string(line) + "'");
    }
    return result;
}

ManifestParse parse_setup_manifest(std::string_view text, std::string_view source) {
    ManifestParse result;
    const auto tokens = pysrc::tokenize(text);
    const auto dynamic = [&] {
        result.requirements.clear();
        result.warnings.push_back(std::string(source) + ": dynamic setup manifest");
        return result;
    };

    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const auto& t = tokens[i];
        const bool keyword = t.is_name("install_requires") && tokens[i + 1].is_op("=");
        const bool dict_key = t.kind == pysrc::TokenKind::String && t.text == "install_requires" && tokens[i + 1].is_op(":");
        if (!keyword && !dict_key) continue;

        std::size_t j = i + 2;
        if (j >= tokens.size() || !(tokens[j].is_op("[") || tokens[j].is_op("("))) return dynamic();
        const std::string close = tokens[j].is_op("[") ? "]" : ")";
        std::vector<std::string> specs;
        bool previous_was_string = false;
        for (++j; j < tokens.size(); ++j) {
            const auto& tok = tokens[j];
            if (tok.is_op(close)) break;
            if (tok.kind == pysrc::TokenKind::Newline) continue;
            if (tok.kind == pysrc::TokenKind::String && !tok.formatted) {
                if (previous_was_string) specs.back() += tok.text; // implicit concatenation
                else specs.push_back(tok.text);
                previous_was_string = true;
            } else if (tok.is_op(",")) {
                previous_was_string = false;
            } else {
                return dynamic();
            }
        }
        if (j >= tokens.size()) return dynamic();
        if (j + 1 < tokens.size() && (tokens[j + 1].is_op("+") || tokens[j + 1].is_op("*") || tokens[j + 1].is_op(".")))
            return dynamic();

        for (const auto& s : specs) {
            if (auto req = parse_requirement_spec(s, RequirementOrigin::DeclaredSetup, source))
                result.requirements.push_back(std::move(*req));
            else
                result.warnings.push_back(std::string(source) + ": unparseable requirement '" + s + "'");
        }
        return result;
    }
    return result;
}

namespace {

std::vector<std::string> shell_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    bool have = false;
    char quote = 0;
    for (char c : text) {
        if (quote) {
            if (c == quote) quote = 0;
            else current.push_back(c);
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            have = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (have) words.push_back(std::move(current));
            current.clear();
            have = false;
        } else {
            current.push_back(c);
            have = true;
        }
    }
    if (have) words.push_back(std::move(current));
    return words;
}

// pip install options that consume the following word.
bool option_takes_value(std::string_view opt) {
    static const std::set<std::string_view> with_value{
        "-r", "--requirement", "-c", "--constraint", "-i", "--index-url", "--extra-index-url", "-f",
        "--find-links", "-t", "--target", "--prefix", "--root", "--src", "--upgrade-strategy", "--trusted-host",
        "--platform", "--python-version", "--implementation", "--abi", "--progress-bar", "--log", "--proxy",
        "--retries", "--timeout", "--exists-action", "--cache-dir", "--only-binary", "--no-binary"};
    return with_value.count(opt) > 0;
}

} // namespace

ManifestParse parse_notebook_installs(std::string_view cell_source, std::string_view source) {
    ManifestParse result;
    for (const auto& tok : pysrc::tokenize(cell_source)) {
        if (tok.kind != pysrc::TokenKind::Magic) continue;
        std::string_view cmd = trim(tok.text);
        if (cmd.empty() || (cmd.front() != '!' && cmd.front() != '%') || cmd.substr(0, 2) == "%%") continue;
        cmd.remove_prefix(1);

        // Shell control operators end the pip command.
        auto stop = cmd.find_first_of(";&|>");
        auto words = shell_words(cmd.substr(0, stop));
        std::size_t i = 0;
        if (i < words.size() && (words[i] == "python" || words[i] == "python3") && i + 2 < words.size() &&
            words[i + 1] == "-m")
            i += 2;
        if (i >= words.size() || (words[i] != "pip" && words[i] != "pip3")) continue;
        if (++i >= words.size() || words[i] != "install") continue;

        for (++i; i < words.size(); ++i) {
            const auto& w = words[i];
            if (w == "-e" || w == "--editable") {
                if (i + 1 < words.size()) {
                    auto line = "-e " + words[++i];
                    if (auto req = parse_requirement_spec(line, RequirementOrigin::DeclaredNotebookInstall, source))
                        result.requirements.push_back(std::move(*req));
                }
                continue;
            }
            if (!w.empty() && w.front() == '-') {
                if ((w == "-r" || w == "--requirement") && i + 1 < words.size())
                    result.warnings.push_back(std::string(source) + ": notebook install of requirements file '" +
                                              words[i + 1] + "' skipped");
                if (option_takes_value(w)) ++i;
                continue;
            }
            if (w.find('{') != std::string::npos || w.find('$') != std::string::npos) {
                result.warnings.push_back(std::string(source) + ": interpolated install argument '" + w + "' skipped");
                continue;
            }
            if (auto req = parse_requirement_spec(w, RequirementOrigin::DeclaredNotebookInstall, source))
                result.requirements.push_back(std::move(*req));
            else
                result.warnings.push_back(std::string(source) + ": unparseable install argument '" + w + "'");
        }
    }
    return result;
}

} // namespace nbrepro::depinfer

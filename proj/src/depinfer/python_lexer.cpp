#include "nbrepro/depinfer/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace nbrepro::pysrc {

namespace {

bool ident_start(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || u >= 0x80;
}

bool ident_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_string_prefix(std::string_view word) {
    if (word.size() > 2) return false;
    std::string lower;
    for (char c : word) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::array<std::string_view, 8> prefixes{"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    return std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end();
}

// Cell magics whose body is still Python.
bool python_cell_magic(std::string_view name) {
    static constexpr std::array<std::string_view, 5> names{"time", "timeit", "capture", "prun", "memit"};
    return std::find(names.begin(), names.end(), name) != names.end();
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        skip_cell_magic();
        if (done_) return std::move(tokens_);
        while (pos_ < src_.size()) {
            if (at_line_start_) {
                at_line_start_ = false;
                if (line_start()) continue;
            }
            char c = src_[pos_];
            if (c == '\n') {
                ++pos_;
                newline();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
                pos_ += src_[pos_ + 1] == '\r' && pos_ + 2 < src_.size() && src_[pos_ + 2] == '\n' ? 3 : 2;
                ++line_;
            } else if (c == '"' || c == '\'') {
                read_string("");
            } else if (ident_start(c)) {
                read_name();
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                read_number();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                if (c == '(' || c == '[' || c == '{') ++depth_;
                if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
                push(TokenKind::Op, std::string(1, c));
                ++pos_;
            }
        }
        end_logical_line();
        return std::move(tokens_);
    }

private:
    void push(TokenKind kind, std::string text, bool formatted = false) {
        tokens_.push_back(Token{kind, std::move(text), line_, formatted});
    }

    void end_logical_line() {
        if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline) push(TokenKind::Newline, "");
    }

    void newline() {
        ++line_;
        if (depth_ == 0) end_logical_line();
        at_line_start_ = true;
    }

    std::string_view rest_of_line() const {
        auto end = src_.find('\n', pos_);
        return src_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
    }

    // A leading "%%name" line decides whether the whole cell is Python.
    void skip_cell_magic() {
        std::size_t p = 0;
        while (p < src_.size() && std::isspace(static_cast<unsigned char>(src_[p]))) ++p;
        if (src_.compare(p, 2, "%%") != 0) return;
        std::size_t q = p + 2;
        while (q < src_.size() && ident_char(src_[q])) ++q;
        auto name = src_.substr(p + 2, q - p - 2);
        auto eol = src_.find('\n', p);
        if (python_cell_magic(name)) {
            line_ += static_cast<std::size_t>(std::count(src_.begin(), src_.begin() + static_cast<long>(p), '\n'));
            pos_ = eol == std::string_view::npos ? src_.size() : eol + 1;
            ++line_;
            return;
        }
        push(TokenKind::Magic, std::string(src_.substr(p)));
        push(TokenKind::Newline, "");
        done_ = true;
    }

    // Returns true when the whole physical line was consumed.
    bool line_start() {
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) ++p;
        if (p >= src_.size()) return false;
        char c = src_[p];
        if (depth_ == 0 && (c == '%' || c == '!')) {
            pos_ = p;
            auto text = rest_of_line();
            std::string magic(text);
            if (!magic.empty() && magic.back() == '\r') magic.pop_back();
            push(TokenKind::Magic, std::move(magic));
            pos_ += text.size();
            end_logical_line();
            return true;
        }
        if (depth_ > 0 && ident_start(c)) {
            // An import statement cannot occur inside brackets; seeing one means
            // an earlier bracket was never closed. Resynchronise.
            std::size_t q = p;
            while (q < src_.size() && ident_char(src_[q])) ++q;
            auto word = src_.substr(p, q - p);
            bool resync = word == "import";
            if (word == "from") {
                auto eol = src_.find('\n', q);
                auto line = src_.substr(q, eol == std::string_view::npos ? std::string_view::npos : eol - q);
                resync = line.find(" import ") != std::string_view::npos;
            }
            if (resync) {
                depth_ = 0;
                end_logical_line();
            }
        }
        return false;
    }

    void read_name() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        auto word = src_.substr(start, pos_ - start);
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && is_string_prefix(word)) {
            read_string(word);
            return;
        }
        push(TokenKind::Name, std::string(word));
    }

    void read_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (ident_char(src_[pos_]) || src_[pos_] == '.')) ++pos_;
        push(TokenKind::Number, std::string(src_.substr(start, pos_ - start)));
    }

    void read_string(std::string_view prefix) {
        bool raw = false;
        bool formatted = false;
        for (char c : prefix) {
            char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            raw = raw || l == 'r';
            formatted = formatted || l == 'f';
        }
        const char quote = src_[pos_];
        const bool triple = src_.compare(pos_, 3, std::string(3, quote)) == 0;
        pos_ += triple ? 3 : 1;
        const std::size_t start_line = line_;
        std::string value;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                char n = src_[pos_ + 1];
                if (n == '\n') ++line_;
                if (raw) {
                    value.push_back(c);
                    value.push_back(n);
                } else {
                    switch (n) {
                    case 'n': value.push_back('\n'); break;
                    case 't': value.push_back('\t'); break;
                    case '\\': value.push_back('\\'); break;
                    case '\'': value.push_back('\''); break;
                    case '"': value.push_back('"'); break;
                    case '\n': break;
                    default:
                        value.push_back(c);
                        value.push_back(n);
                    }
                }
                pos_ += 2;
                continue;
            }
            if (triple) {
                if (src_.compare(pos_, 3, std::string(3, quote)) == 0) {
                    pos_ += 3;
                    break;
                }
            } else {
                if (c == quote) {
                    ++pos_;
                    break;
                }
                if (c == '\n') break; // unterminated: the newline is handled by the main loop
            }
            if (c == '\n') ++line_;
            value.push_back(c);
            ++pos_;
        }
        tokens_.push_back(Token{TokenKind::String, std::move(value), start_line, formatted});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool done_ = false;
    std::vector<Token> tokens_;
};

} // namespace

std::vector<Token> tokenize(std::string_view source) {
    return Lexer(source).run();
}

std::vector<std::vector<Token>> logical_lines(const std::vector<Token>& tokens) {
    std::vector<std::vector<Token>> lines;
    std::vector<Token> current;
    for (const auto& t : tokens) {
        if (t.kind == TokenKind::Newline) {
            if (!current.empty()) lines.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(t);
        }
    }
    if (!current.empty()) lines.push_back(std::move(current));
    return lines;
}

} // namespace nbrepro::pysrc

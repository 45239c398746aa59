#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Best-effort tokenizer for notebook code cells. Never throws: unterminated
// strings end at end-of-line (or end-of-input for triple quotes) and
// unbalanced brackets are clamped, so broken cells still yield tokens.
namespace nbrepro::pysrc {

enum class TokenKind {
    Name,
    Number,
    String,  // text holds the decoded literal value
    Op,      // single punctuation character
    Newline, // end of a logical line
    Magic,   // IPython line magic / shell escape (text = whole line), or a non-Python cell magic body
};

struct Token {
    TokenKind kind = TokenKind::Op;
    std::string text;
    std::size_t line = 1;
    bool formatted = false; // f-string literal

    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    bool is_op(std::string_view t) const { return is(TokenKind::Op, t); }
    bool is_name(std::string_view t) const { return is(TokenKind::Name, t); }
};

std::vector<Token> tokenize(std::string_view source);

// Splits a token stream on Newline tokens; empty lines are dropped.
std::vector<std::vector<Token>> logical_lines(const std::vector<Token>& tokens);

} // namespace nbrepro::pysrc

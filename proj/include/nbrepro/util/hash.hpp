#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace nbrepro::util {

std::string sha256_hex(std::string_view data);

// Lowercase hex token from the OS entropy source.
std::string random_hex_token(std::size_t hex_chars);

} // namespace nbrepro::util

#include "nbrepro/util/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <random>

namespace nbrepro::util {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string random_hex_token(std::size_t hex_chars) {
    static constexpr char hex[] = "0123456789abcdef";
    std::random_device rd;
    std::string out;
    out.reserve(hex_chars);
    while (out.size() < hex_chars) {
        auto word = rd();
        for (int i = 0; i < 8 && out.size() < hex_chars; ++i, word >>= 4) out.push_back(hex[word & 0xf]);
    }
    return out;
}

} // namespace nbrepro::util

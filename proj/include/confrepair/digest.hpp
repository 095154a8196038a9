// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace confrepair {

/// SHA-256 content digest, rendered as lowercase hex.
class Digest {
public:
    Digest() {
        ctx_ = EVP_MD_CTX_new();
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("digest: failed to initialize SHA-256");
    }
    Digest(const Digest&) = delete;
    Digest& operator=(const Digest&) = delete;
    ~Digest() {
        if (ctx_) EVP_MD_CTX_free(ctx_);
    }

    Digest& update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1)
            throw std::runtime_error("digest: update failed");
        return *this;
    }

    // Length-framed update so that concatenated inputs cannot collide by
    // shifting bytes across boundaries.
    Digest& update_framed(std::string_view data) {
        uint64_t n = data.size();
        char frame[8];
        for (int i = 0; i < 8; ++i) frame[i] = static_cast<char>((n >> (8 * i)) & 0xff);
        update(std::string_view(frame, 8));
        return update(data);
    }

    std::string hex() const {
        EVP_MD_CTX* copy = EVP_MD_CTX_new();
        if (!copy || EVP_MD_CTX_copy_ex(copy, ctx_) != 1) {
            if (copy) EVP_MD_CTX_free(copy);
            throw std::runtime_error("digest: copy failed");
        }
        unsigned char raw[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        int ok = EVP_DigestFinal_ex(copy, raw, &len);
        EVP_MD_CTX_free(copy);
        if (ok != 1) throw std::runtime_error("digest: finalize failed");
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[raw[i] >> 4]);
            out.push_back(digits[raw[i] & 0xf]);
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_ = nullptr;
};

inline std::string sha256_hex(std::string_view data) {
    Digest d;
    d.update(data);
    return d.hex();
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace confrepair

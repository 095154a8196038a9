// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include <unistd.h>

#include "confrepair/diagnostics.hpp"
#include "confrepair/digest.hpp"

namespace confrepair {

struct CacheKey {
    std::string producer;       // kconfig | kbuild | cpp
    std::string content_digest; // hash of exactly the producer's input bytes
};

/// Content-addressed on-disk store for extracted constraints. Entries are
/// immutable; writers stage to a temp file and rename, so readers never see
/// a torn entry. The format version salts the key, so a bump invalidates
/// everything implicitly.
class Cache {
public:
    static constexpr const char* format_version = "1";

    Cache() = default; // disabled
    explicit Cache(std::filesystem::path dir, Diagnostics* diag = nullptr)
        : dir_(std::move(dir)), diag_(diag) {}

    bool enabled() const { return !dir_.empty(); }

    std::optional<std::string> get(const CacheKey& key) const {
        if (!enabled()) return std::nullopt;
        std::filesystem::path p = path_of(key);
        std::error_code ec;
        if (!std::filesystem::exists(p, ec)) return std::nullopt;
        std::string entry;
        try {
            entry = read_file_bytes(p);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        // entry = header line with payload digest, then payload
        size_t nl = entry.find('\n');
        bool ok = nl != std::string::npos;
        std::string payload;
        if (ok) {
            std::string header = entry.substr(0, nl);
            payload = entry.substr(nl + 1);
            ok = header == entry_header(payload);
        }
        if (!ok) {
            if (diag_) diag_->warn("cache: corrupt entry removed: " + p.string());
            std::filesystem::remove(p, ec);
            return std::nullopt;
        }
        return payload;
    }

    void put(const CacheKey& key, std::string_view bytes) const {
        if (!enabled()) return;
        std::filesystem::path p = path_of(key);
        std::filesystem::create_directories(p.parent_path());

        static std::atomic<unsigned> counter{0};
        std::string tmp_name = p.filename().string() + ".tmp." +
                               std::to_string(::getpid()) + "." +
                               std::to_string(counter.fetch_add(1));
        std::filesystem::path tmp = p.parent_path() / tmp_name;
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cache: cannot write " + tmp.string());
            std::string payload(bytes);
            out << entry_header(payload) << '\n' << payload;
            out.flush();
            if (!out) {
                std::error_code ec;
                std::filesystem::remove(tmp, ec);
                throw std::runtime_error("cache: write failed for " + tmp.string());
            }
        }
        std::filesystem::rename(tmp, p); // atomic visibility
    }

    std::filesystem::path path_of(const CacheKey& key) const {
        std::string hex = sha256_hex(std::string(format_version) + "\x1f" + key.producer +
                                     "\x1f" + key.content_digest);
        return dir_ / key.producer / hex.substr(0, 2) / hex;
    }

private:
    static std::string entry_header(const std::string& payload) {
        return "confrepair-cache " + std::string(format_version) + " " + sha256_hex(payload);
    }

    std::filesystem::path dir_;
    Diagnostics* diag_ = nullptr;
};

} // namespace confrepair

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace confrepair {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(file), line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// Collects non-fatal findings from parsers and the normalizer.
struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

} // namespace confrepair

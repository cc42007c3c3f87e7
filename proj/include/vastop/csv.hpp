#pragma once

// Minimal CSV writer with shortest round-trip number formatting, so identical inputs give
// byte-identical files.

#include "vastop/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <system_error>

namespace vastop {

/// Shortest decimal string that parses back to the same double; "inf"/"-inf"/"nan" otherwise.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& file, std::initializer_list<std::string_view> header) : out_(file) {
        if (!out_) throw ConfigError("cannot write '" + file.string() + "'", "output.dir");
        bool first = true;
        for (auto h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    CsvWriter& cell(double v) { return text(format_number(v)); }
    CsvWriter& cell(std::size_t v) { return text(std::to_string(v)); }
    CsvWriter& cell(int v) { return text(std::to_string(v)); }
    CsvWriter& cell(std::string_view s) { return text(s); }
    CsvWriter& cell(const char* s) { return text(s); }

    void end_row() {
        out_ << '\n';
        fresh_ = true;
    }

private:
    CsvWriter& text(std::string_view s) {
        if (!fresh_) out_ << ',';
        out_ << s;
        fresh_ = false;
        return *this;
    }

    std::ofstream out_;
    bool fresh_ = true;
};

}  // namespace vastop

#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "wp/common.hpp"

namespace wp {

// shortest round-trip formatting; keeps CSV output byte-stable across runs
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path) {
        if (!os_) fail(Errc::io_failure, "cannot open for writing: " + path);
        for (size_t i = 0; i < header.size(); ++i) {
            if (i) os_ << ',';
            os_ << header[i];
        }
        os_ << '\n';
        cols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) fail(Errc::io_failure, "csv row width mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

private:
    std::ofstream os_;
    size_t cols_ = 0;
};

}  // namespace wp

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wp/field.hpp"

namespace wp {

// "WPG1" | u32 rank | u64 dims[rank] | f64 payload (row major, t slowest) |
// UTF-8 JSON metadata trailer. Little endian, bit exact.
struct GridFile {
    std::vector<std::uint64_t> dims;
    std::vector<double> payload;
    nlohmann::json meta;
};

void write_grid_file(const std::string& path, const GridFile& f);
GridFile read_grid_file(const std::string& path);

GridFile grid_file_from_field(const Field3D& f, nlohmann::json meta);
Field3D field_from_grid_file(const GridFile& f);

}  // namespace wp

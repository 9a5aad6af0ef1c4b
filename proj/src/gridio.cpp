#include "wp/gridio.hpp"

#include <cstring>
#include <fstream>

namespace wp {

namespace {

constexpr char kMagic[4] = {'W', 'P', 'G', '1'};

template <typename T>
void put_le(std::string& out, T v) {
    for (size_t b = 0; b < sizeof(T); ++b)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xff));
}

template <typename T>
T get_le(const std::string& s, size_t& pos) {
    if (pos + sizeof(T) > s.size()) fail(Errc::truncation, "grid file ends inside a header field");
    std::uint64_t v = 0;
    for (size_t b = 0; b < sizeof(T); ++b)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + b])) << (8 * b);
    pos += sizeof(T);
    return static_cast<T>(v);
}

}  // namespace

void write_grid_file(const std::string& path, const GridFile& f) {
    std::string out;
    out.append(kMagic, 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.dims.size()));
    std::uint64_t total = 1;
    for (auto d : f.dims) {
        put_le<std::uint64_t>(out, d);
        total *= d;
    }
    if (total != f.payload.size())
        fail(Errc::dim_overflow, "payload length does not match the declared dimensions");
    size_t base = out.size();
    out.resize(base + f.payload.size() * 8);
    static_assert(sizeof(double) == 8);
    std::memcpy(out.data() + base, f.payload.data(), f.payload.size() * 8);
    out += f.meta.dump();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(Errc::io_failure, "cannot open for writing: " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) fail(Errc::io_failure, "write failed: " + path);
}

GridFile read_grid_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::io_failure, "cannot open: " + path);
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (s.size() < 4 || std::memcmp(s.data(), kMagic, 4) != 0)
        fail(Errc::bad_magic, "not a WPG1 file: " + path);
    size_t pos = 4;
    GridFile f;
    auto rank = get_le<std::uint32_t>(s, pos);
    if (rank > 8) fail(Errc::dim_overflow, "implausible rank in grid file");
    std::uint64_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
        std::uint64_t d = get_le<std::uint64_t>(s, pos);
        if (d == 0 || total > (1ull << 33) / std::max<std::uint64_t>(d, 1))
            fail(Errc::dim_overflow, "grid file dimensions overflow the desk-scale guard");
        total *= d;
        f.dims.push_back(d);
    }
    if (pos + total * 8 > s.size())
        fail(Errc::truncation, "grid file payload shorter than the header promises");
    f.payload.resize(total);
    std::memcpy(f.payload.data(), s.data() + pos, total * 8);
    pos += total * 8;
    if (pos < s.size()) {
        try {
            f.meta = nlohmann::json::parse(s.substr(pos));
        } catch (const nlohmann::json::parse_error&) {
            fail(Errc::truncation, "grid file metadata trailer is not valid JSON");
        }
    }
    return f;
}

GridFile grid_file_from_field(const Field3D& f, nlohmann::json meta) {
    GridFile gf;
    gf.dims = {static_cast<std::uint64_t>(f.nl), static_cast<std::uint64_t>(f.ny),
               static_cast<std::uint64_t>(f.nx)};
    gf.payload = f.v;
    gf.meta = std::move(meta);
    return gf;
}

Field3D field_from_grid_file(const GridFile& gf) {
    if (gf.dims.size() != 3) fail(Errc::dim_overflow, "expected a rank-3 field");
    Field3D f(static_cast<int>(gf.dims[0]), static_cast<int>(gf.dims[1]),
              static_cast<int>(gf.dims[2]));
    f.v = gf.payload;
    return f;
}

}  // namespace wp

#ifndef CVF_IO_HPP
#define CVF_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvf/grid.hpp"

namespace cvf {

// CVF1 container: 4 magic bytes "CVF1", one UTF-8 JSON header line
// (dim, sizes, kind in {scalar, vector, map}, payload byte length), a
// newline, then raw little-endian float64 payload, row-major with
// components interleaved per node for vector/map kinds. Round trips are
// bit-exact.

namespace detail {

inline void put_f64_le(std::string& out, double x) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out.push_back(char((u >> (8 * b)) & 0xff));
}

inline double get_f64_le(const char* p) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= std::uint64_t(std::uint8_t(p[b])) << (8 * b);
    return std::bit_cast<double>(u);
}

}  // namespace detail

struct CvfFile {
    nlohmann::json header;
    std::vector<double> payload;  // node-major, interleaved components

    int dim() const { return header.at("dim").get<int>(); }
    std::string kind() const { return header.at("kind").get<std::string>(); }
    GridSpec spec() const {
        auto sizes = header.at("sizes").get<std::vector<int>>();
        require(int(sizes.size()) == dim(), errc::format_error, "sizes/dim mismatch");
        return dim() == 2 ? GridSpec::make2(sizes[0], sizes[1])
                          : GridSpec::make3(sizes[0], sizes[1], sizes[2]);
    }
};

inline std::string encode_cvf(const nlohmann::json& header_in,
                              const std::vector<double>& payload) {
    nlohmann::json header = header_in;
    header["payload"] = payload.size() * 8;
    std::string out = "CVF1";
    out += header.dump();
    out += '\n';
    out.reserve(out.size() + payload.size() * 8);
    for (double x : payload) detail::put_f64_le(out, x);
    return out;
}

inline CvfFile decode_cvf(const std::string& bytes) {
    require(bytes.size() >= 5 && bytes.compare(0, 4, "CVF1") == 0, errc::format_error,
            "bad magic");
    const std::size_t nl = bytes.find('\n', 4);
    require(nl != std::string::npos, errc::format_error, "missing header newline");
    CvfFile f;
    try {
        f.header = nlohmann::json::parse(bytes.substr(4, nl - 4));
    } catch (const nlohmann::json::exception& e) {
        fail(errc::format_error, std::string("header parse: ") + e.what());
    }
    require(f.header.contains("dim") && f.header.contains("sizes") &&
                f.header.contains("kind") && f.header.contains("payload"),
            errc::format_error, "header missing required keys");
    const std::size_t nbytes = f.header.at("payload").get<std::size_t>();
    require(nbytes % 8 == 0, errc::format_error, "payload length not a multiple of 8");
    require(bytes.size() - nl - 1 == nbytes, errc::format_error, "payload size mismatch");
    f.payload.resize(nbytes / 8);
    for (std::size_t i = 0; i < f.payload.size(); ++i)
        f.payload[i] = detail::get_f64_le(bytes.data() + nl + 1 + 8 * i);
    return f;
}

inline void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(bool(out), errc::format_error, "cannot open for write: " + path);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    require(bool(out), errc::format_error, "write failed: " + path);
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), errc::format_error, "cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

namespace detail {

inline nlohmann::json base_header(const GridSpec& spec, const std::string& kind) {
    nlohmann::json h;
    h["dim"] = spec.dim;
    std::vector<int> sizes(spec.n.begin(), spec.n.begin() + spec.dim);
    h["sizes"] = sizes;
    h["kind"] = kind;
    return h;
}

inline std::vector<double> interleave(const VectorField& f) {
    const std::size_t N = f.spec.nodes();
    std::vector<double> out(N * f.spec.dim);
    for (std::size_t i = 0; i < N; ++i)
        for (int c = 0; c < f.spec.dim; ++c) out[i * f.spec.dim + c] = f.at(c, i);
    return out;
}

inline VectorField deinterleave(const GridSpec& spec, const std::vector<double>& payload) {
    VectorField f(spec);
    const std::size_t N = spec.nodes();
    require(payload.size() == N * std::size_t(spec.dim), errc::format_error,
            "vector payload size mismatch");
    for (std::size_t i = 0; i < N; ++i)
        for (int c = 0; c < spec.dim; ++c) f.at(c, i) = payload[i * spec.dim + c];
    return f;
}

}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& f,
                        const nlohmann::json& extra = {}) {
    nlohmann::json h = detail::base_header(f.spec, "scalar");
    if (!extra.is_null()) h.update(extra);
    write_bytes(path, encode_cvf(h, f.v));
}

inline void write_field(const std::string& path, const VectorField& f,
                        const nlohmann::json& extra = {}) {
    nlohmann::json h = detail::base_header(f.spec, "vector");
    if (!extra.is_null()) h.update(extra);
    write_bytes(path, encode_cvf(h, detail::interleave(f)));
}

inline void write_field(const std::string& path, const GridMap& m,
                        const nlohmann::json& extra = {}) {
    nlohmann::json h = detail::base_header(m.spec(), "map");
    if (!extra.is_null()) h.update(extra);
    write_bytes(path, encode_cvf(h, detail::interleave(m.displacement)));
}

inline CvfFile read_cvf(const std::string& path) { return decode_cvf(read_bytes(path)); }

inline ScalarField read_scalar(const std::string& path) {
    CvfFile f = read_cvf(path);
    require(f.kind() == "scalar", errc::format_error, "expected scalar kind");
    GridSpec spec = f.spec();
    require(f.payload.size() == spec.nodes(), errc::format_error, "scalar payload mismatch");
    ScalarField s(spec);
    s.v = f.payload;
    return s;
}

inline VectorField read_vector(const std::string& path) {
    CvfFile f = read_cvf(path);
    require(f.kind() == "vector", errc::format_error, "expected vector kind");
    return detail::deinterleave(f.spec(), f.payload);
}

inline GridMap read_map(const std::string& path) {
    CvfFile f = read_cvf(path);
    require(f.kind() == "map", errc::format_error, "expected map kind");
    return GridMap(detail::deinterleave(f.spec(), f.payload));
}

}  // namespace cvf

#endif

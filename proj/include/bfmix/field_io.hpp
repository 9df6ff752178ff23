// Binary field dumps.
//
// Layout: magic "BFX1", three u32 dims, f64 dx, then row-major little-endian
// f64 payload - (re, im) pairs for complex fields, single f64 for real fields.
#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "bfmix/grid.hpp"

namespace bfmix {

namespace detail {

inline void write_field_header(std::ostream& os, const Grid3D& g) {
    os.write("BFX1", 4);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(g.nx),
                                   static_cast<std::uint32_t>(g.ny),
                                   static_cast<std::uint32_t>(g.nz)};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(&g.dx), sizeof(double));
}

struct FieldHeader {
    std::uint32_t nx, ny, nz;
    double dx;
};

inline FieldHeader read_field_header(std::istream& is, const std::string& path) {
    char magic[4];
    FieldHeader h{};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BFX1", 4) != 0)
        throw std::runtime_error("not a BFX1 field file: " + path);
    std::uint32_t dims[3];
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    is.read(reinterpret_cast<char*>(&h.dx), sizeof(double));
    if (!is) throw std::runtime_error("truncated BFX1 header: " + path);
    h.nx = dims[0];
    h.ny = dims[1];
    h.nz = dims[2];
    return h;
}

}  // namespace detail

inline void write_field(std::ostream& os, const ComplexField3D& f) {
    detail::write_field_header(os, f.grid());
    os.write(reinterpret_cast<const char*>(f.data()),
             static_cast<std::streamsize>(f.size() * sizeof(cplx)));
}

inline void write_field(std::ostream& os, const RealField3D& f) {
    detail::write_field_header(os, f.grid());
    os.write(reinterpret_cast<const char*>(f.data()),
             static_cast<std::streamsize>(f.size() * sizeof(double)));
}

template <class FieldT>
void save_field(const std::string& path, const FieldT& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_field(os, f);
    if (!os) throw std::runtime_error("write failed: " + path);
}

// Readers validate that the stored dims match the provided grid; the grid
// object itself stays owned by the caller.
inline ComplexField3D read_complex_field(std::istream& is, const Grid3D& g,
                                         const std::string& path = "<stream>") {
    const auto h = detail::read_field_header(is, path);
    if (h.nx != static_cast<std::uint32_t>(g.nx) ||
        h.ny != static_cast<std::uint32_t>(g.ny) ||
        h.nz != static_cast<std::uint32_t>(g.nz))
        throw std::runtime_error("field dims mismatch in " + path);
    ComplexField3D f(g);
    is.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("truncated field payload: " + path);
    return f;
}

inline RealField3D read_real_field(std::istream& is, const Grid3D& g,
                                   const std::string& path = "<stream>") {
    const auto h = detail::read_field_header(is, path);
    if (h.nx != static_cast<std::uint32_t>(g.nx) ||
        h.ny != static_cast<std::uint32_t>(g.ny) ||
        h.nz != static_cast<std::uint32_t>(g.nz))
        throw std::runtime_error("field dims mismatch in " + path);
    RealField3D f(g);
    is.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated field payload: " + path);
    return f;
}

template <class FieldT>
FieldT load_field(const std::string& path, const Grid3D& g) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    if constexpr (std::is_same_v<FieldT, ComplexField3D>)
        return read_complex_field(is, g, path);
    else
        return read_real_field(is, g, path);
}

}  // namespace bfmix

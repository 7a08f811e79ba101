#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cfdiff/error.hpp"

// Little-endian primitive readers/writers shared by the dataset and
// checkpoint containers. Arrays carry a (u32 ndim, u64 dims...) header;
// complex payloads are interleaved (re, im).
namespace cfdiff::io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("binary read: truncated u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("binary read: truncated u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    if (n > (1ULL << 32)) throw IoError("binary read: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw IoError("binary read: truncated string");
    return s;
}

inline void write_shape(std::ostream& os, const std::vector<std::uint64_t>& dims) {
    write_u32(os, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) write_u64(os, d);
}

inline std::vector<std::uint64_t> read_shape(std::istream& is) {
    const std::uint32_t ndim = read_u32(is);
    if (ndim > 8) throw IoError("binary read: implausible array rank");
    std::vector<std::uint64_t> dims(ndim);
    for (auto& d : dims) d = read_u64(is);
    return dims;
}

inline std::uint64_t shape_numel(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

inline void write_real_array(std::ostream& os, const std::vector<std::uint64_t>& dims,
                             const std::vector<double>& data) {
    if (shape_numel(dims) != data.size()) throw IoError("write_real_array: shape/data mismatch");
    write_shape(os, dims);
    for (double v : data) write_f64(os, v);
}

inline std::vector<double> read_real_array(std::istream& is, std::vector<std::uint64_t>& dims) {
    dims = read_shape(is);
    std::vector<double> data(shape_numel(dims));
    for (auto& v : data) v = read_f64(is);
    return data;
}

inline void write_complex_array(std::ostream& os, const std::vector<std::uint64_t>& dims,
                                const std::vector<std::complex<double>>& data) {
    if (shape_numel(dims) != data.size())
        throw IoError("write_complex_array: shape/data mismatch");
    write_shape(os, dims);
    for (const auto& v : data) {
        write_f64(os, v.real());
        write_f64(os, v.imag());
    }
}

inline std::vector<std::complex<double>> read_complex_array(std::istream& is,
                                                            std::vector<std::uint64_t>& dims) {
    dims = read_shape(is);
    std::vector<std::complex<double>> data(shape_numel(dims));
    for (auto& v : data) {
        const double re = read_f64(is);
        const double im = read_f64(is);
        v = {re, im};
    }
    return data;
}

}  // namespace cfdiff::io

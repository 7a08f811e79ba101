#include "cfdiff/io/hash.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "cfdiff/error.hpp"

namespace cfdiff::io {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t state) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ull;
    }
    return state;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    std::uint64_t state = 0xcbf29ce484222325ull;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        state = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), state);
    }
    if (!in.eof()) throw IoError("read failed while hashing '" + path + "'");
    return state;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace cfdiff::io

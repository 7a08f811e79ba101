#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace cfdiff::io {

// 64-bit FNV-1a; good enough for change detection, not for security.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t state = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64_file(const std::string& path);  // IoError naming the path

std::string hex64(std::uint64_t value);  // zero-padded lowercase hex

}  // namespace cfdiff::io

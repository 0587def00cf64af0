#pragma once

#include <cstdint>
#include <string>

namespace sns {

// Whole-file helpers; failures throw std::runtime_error naming the path.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// FNV-1a over raw bytes; the hash used for manifests and path checksums.
std::uint64_t fnv1a_bytes(const void* data, std::size_t len);
std::uint64_t fnv1a_bytes(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace sns

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace vihmc {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
/// FNV-1a rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
/// Content hash of a file on disk.
std::string file_hash(const std::filesystem::path& path);

}  // namespace vihmc

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace fimscore {

// FNV-1a, 64-bit. Used for artifact checksums in manifests and sidecars.
class Fnv1a {
 public:
  void update(std::span<const unsigned char> bytes);
  void update(std::string_view text);
  void update(double value);  // little-endian IEEE-754 bytes
  void update(std::uint64_t value);

  std::uint64_t value() const { return hash_; }
  std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);
std::string file_checksum(const std::filesystem::path& path);

}  // namespace fimscore

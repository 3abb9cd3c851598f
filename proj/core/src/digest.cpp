#include "equirate/digest.hpp"

#include <array>

#include <fmt/format.h>
#include <openssl/sha.h>

namespace equirate {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), out.data());
  std::string hex;
  hex.reserve(out.size() * 2);
  for (unsigned char b : out) {
    fmt::format_to(std::back_inserter(hex), "{:02x}", b);
  }
  return hex;
}

DigestBuilder& DigestBuilder::add(std::string_view field) {
  buffer_ += std::to_string(field.size());
  buffer_ += ':';
  buffer_.append(field);
  return *this;
}

std::string DigestBuilder::hex() const { return sha256_hex(buffer_); }

}  // namespace equirate

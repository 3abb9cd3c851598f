#pragma once

#include <string>
#include <string_view>

namespace equirate {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Incremental digest over length-prefixed fields, so ("ab","c") and ("a","bc")
// never collide.
class DigestBuilder {
 public:
  DigestBuilder& add(std::string_view field);
  std::string hex() const;

 private:
  std::string buffer_;
};

}  // namespace equirate

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace equirate::csv {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerant.
// Embedded newlines inside quotes are supported.
class Reader {
 public:
  explicit Reader(std::istream& in);

  // Reads the header row and remembers column positions.
  const std::vector<std::string>& read_header();
  std::optional<std::vector<std::string>> next_row();

  // Index of `name` in the header, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  // Throws Error(kParse) naming the missing columns.
  void require_columns(std::initializer_list<std::string_view> names) const;

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

// Opens `path` for reading, throws Error(kIo) on failure.
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace equirate::csv

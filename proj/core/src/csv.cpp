#include "equirate/csv.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "equirate/error.hpp"

namespace equirate::csv {

Reader::Reader(std::istream& in) : in_(in) {}

const std::vector<std::string>& Reader::read_header() {
  auto row = next_row();
  if (!row) {
    throw Error(ErrorKind::kParse, "csv input is empty, expected a header row");
  }
  header_ = std::move(*row);
  for (auto& h : header_) {
    h.erase(0, h.find_first_not_of(" \t"));
    h.erase(h.find_last_not_of(" \t") + 1);
  }
  // Strip a UTF-8 BOM on the first column.
  if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header_[0].erase(0, 3);
  }
  return header_;
}

std::optional<std::vector<std::string>> Reader::next_row() {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c = 0;
  while (in_.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // swallowed; the following '\n' ends the row
    } else if (c == '\n') {
      ++line_;
      if (fields.empty() && field.empty()) {
        any = false;  // blank line
        continue;
      }
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::kParse, fmt::format("unterminated quoted field near line {}", line_ + 1));
  }
  if (!any || (fields.empty() && field.empty())) {
    return std::nullopt;
  }
  ++line_;
  fields.push_back(std::move(field));
  return fields;
}

std::optional<std::size_t> Reader::column(std::string_view name) const {
  auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header_.begin());
}

void Reader::require_columns(std::initializer_list<std::string_view> names) const {
  std::string missing;
  for (auto name : names) {
    if (!column(name)) {
      if (!missing.empty()) missing += ", ";
      missing.append(name);
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorKind::kParse, fmt::format("csv header is missing column(s): {}", missing));
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  return in;
}

}  // namespace equirate::csv

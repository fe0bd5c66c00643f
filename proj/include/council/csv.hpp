#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace council::csv {

/// RFC 4180 table: first row is the header. Fields may be quoted; embedded
/// quotes are doubled.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::optional<std::size_t> column(std::string_view name) const;
  /// Column index or SchemaError naming the missing column.
  std::size_t require(std::string_view name) const;
  /// Throws SchemaError unless every name is present.
  void require_all(const std::vector<std::string>& names) const;

  const std::string& at(std::size_t row, std::size_t col) const { return rows_[row][col]; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

/// Shortest round-trip decimal rendering; NaN renders as the empty field.
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace council::csv

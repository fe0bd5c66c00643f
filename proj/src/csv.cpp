#include "council/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "council/common.hpp"
#include "council/text.hpp"

namespace council::csv {

Table::Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
    : header_(std::move(header)), rows_(std::move(rows)) {}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw SchemaError("missing CSV column '" + std::string(name) + "'");
}

void Table::require_all(const std::vector<std::string>& names) const {
  for (const auto& n : names) require(n);
}

namespace {

// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw SchemaError("unterminated quoted CSV field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

Table read(std::istream& in) {
  std::vector<std::string> header;
  // Skip a UTF-8 BOM.
  if (in.peek() == 0xEF) {
    char bom[3];
    in.read(bom, 3);
  }
  if (!read_record(in, header)) throw SchemaError("empty CSV input");
  for (auto& h : header) h = text::trim(h);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (read_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != header.size()) {
      throw SchemaError("CSV row " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    rows.push_back(rec);
  }
  return Table(std::move(header), std::move(rows));
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open CSV file '" + path + "'");
  return read(in);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  std::string t = text::trim(s);
  if (t.empty() || t == "NA" || t == "nan" || t == "NaN") return std::nan("");
  double v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw SchemaError("not a number: '" + t + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  std::string t = text::trim(s);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw SchemaError("not an integer: '" + t + "'");
  }
  return v;
}

}  // namespace council::csv

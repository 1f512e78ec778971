#include "vxai/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vxai/error.hpp"

namespace vxai::csv {

std::string format(double v) {
  if (!std::isfinite(v)) return {};
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format(std::optional<double> v) { return v ? format(*v) : std::string{}; }

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError("unknown column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

namespace {

void write_row(std::ostream& os, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << quote(row[i]);
  }
  os << '\n';
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string to_string(const Table& t) {
  std::ostringstream os;
  write_row(os, t.header);
  for (const auto& r : t.rows) write_row(os, r);
  return os.str();
}

void write(const Table& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << to_string(t);
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split_row(line);
    if (first) {
      t.header = std::move(row);
      first = false;
    } else {
      if (row.size() != t.header.size())
        throw InputError("'" + path.string() + "': row has " + std::to_string(row.size()) + " fields, header has " +
                         std::to_string(t.header.size()));
      t.rows.push_back(std::move(row));
    }
  }
  if (first) throw InputError("'" + path.string() + "' is empty");
  return t;
}

}  // namespace vxai::csv

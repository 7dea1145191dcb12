#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "sigtest/error.hpp"
#include "sigtest/signature.hpp"

namespace sigtest {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    out.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<PathStream> read_path_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("path CSV is empty");
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "path_id" || header[1] != "t") {
    throw DataError("path CSV header must start with path_id,t,x1");
  }
  const int dim = static_cast<int>(header.size()) - 2;

  std::vector<PathStream> paths;
  std::set<std::string> seen;
  std::string current;
  std::vector<double> times;
  std::vector<double> points;
  auto flush = [&]() {
    if (times.empty()) return;
    paths.emplace_back(std::move(times), std::move(points), dim, current);
    times.clear();
    points.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0] != current || times.empty()) {
      if (!times.empty() || !current.empty()) flush();
      if (!seen.insert(fields[0]).second) {
        throw DataError("line " + std::to_string(line_no) + ": rows of path '" + fields[0] +
                        "' are not contiguous");
      }
      current = fields[0];
    }
    times.push_back(parse_number(fields[1], line_no));
    for (int k = 0; k < dim; ++k) {
      points.push_back(parse_number(fields[static_cast<std::size_t>(k) + 2], line_no));
    }
  }
  flush();
  if (paths.empty()) throw DataError("path CSV contains no paths");
  return paths;
}

std::vector<PathStream> read_path_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open path CSV '" + path + "'");
  return read_path_csv(in);
}

void write_path_csv(std::ostream& out, std::span<const PathStream> paths) {
  if (paths.empty()) throw DataError("no paths to write");
  const int dim = paths.front().dim();
  out << "path_id,t";
  for (int k = 1; k <= dim; ++k) out << ",x" << k;
  out << '\n';
  for (const auto& p : paths) {
    if (p.dim() != dim) throw DataError("paths of mixed dimension cannot share one CSV");
    for (std::size_t i = 0; i < p.nodes(); ++i) {
      out << p.id() << ',' << format_double(p.time(i));
      for (double v : p.point(i)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_path_csv_file(const std::string& path, std::span<const PathStream> paths) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write path CSV '" + path + "'");
  write_path_csv(out, paths);
}

}  // namespace sigtest

#include "ppk/io.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "ppk/errors.hpp"

namespace ppk {

namespace {

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

double parse_field(const std::string& text, const std::filesystem::path& path, int line) {
  const std::string t = strip(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    fail(ErrorKind::Io, path.string() + ":" + std::to_string(line) + ": bad number '" + t + "'");
  }
  return v;
}

}  // namespace

PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open pattern file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || strip(line) != "x,y") {
    fail(ErrorKind::Io, path.string() + ":1: expected header 'x,y'");
  }
  PointPattern pattern{{}, window};
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (strip(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      fail(ErrorKind::Io, path.string() + ":" + std::to_string(number) + ": expected two fields");
    }
    const Point p{parse_field(line.substr(0, comma), path, number),
                  parse_field(line.substr(comma + 1), path, number)};
    if (!window.observed(p)) {
      fail(ErrorKind::Io, path.string() + ":" + std::to_string(number) +
                              ": point lies outside the observed window");
    }
    pattern.points.push_back(p);
  }
  return pattern;
}

std::string format_double(double v) { return fmt::format("{}", v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  auto append_row = [&text](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) text += ',';
      const std::string& f = fields[k];
      if (f.find_first_of(",\"\n") == std::string::npos) {
        text += f;
        continue;
      }
      text += '"';
      for (char ch : f) {
        if (ch == '"') text += '"';
        text += ch;
      }
      text += '"';
    }
    text += '\n';
  };
  append_row(header);
  for (const auto& r : rows) append_row(r);
  write_text(path, text);
}

}  // namespace ppk

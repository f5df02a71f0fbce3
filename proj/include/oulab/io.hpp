#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "oulab/errors.hpp"

namespace oulab::io {

/// Shortest-independent fixed format: 17 significant digits, C locale.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal RFC-4180 writer: LF line endings, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> cols) {
    bool first = true;
    for (auto c : cols) {
      if (!first) os_ << ',';
      field(c);
      first = false;
    }
    os_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((emit(vals, first)), ...);
    os_ << '\n';
  }

 private:
  void field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
      os_ << s;
      return;
    }
    os_ << '"';
    for (char ch : s) {
      if (ch == '"') os_ << '"';
      os_ << ch;
    }
    os_ << '"';
  }
  void emit(double v, bool& first) { sep(first), os_ << fmt17(v); }
  void emit(bool v, bool& first) { sep(first), os_ << (v ? "true" : "false"); }
  void emit(int v, bool& first) { sep(first), os_ << v; }
  void emit(long v, bool& first) { sep(first), os_ << v; }
  void emit(unsigned long v, bool& first) { sep(first), os_ << v; }
  void emit(std::string_view v, bool& first) { sep(first), field(v); }
  void emit(const std::string& v, bool& first) { sep(first), field(v); }
  void emit(const char* v, bool& first) { sep(first), field(v); }
  void sep(bool& first) {
    if (!first) os_ << ',';
    first = false;
  }

  std::ostream& os_;
};

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!os) throw Error("cannot open output file " + path);
  return os;
}

}  // namespace oulab::io

#include "mcsql/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace mcsql {

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  if (begin == end) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data() + begin, s.data() + end, value);
  if (ec != std::errc() || ptr != s.data() + end) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string canonical_number(double v) {
  if (v == 0.0) return "0";  // avoids "-0"
  double rounded = std::round(v);
  if (rounded == v && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string canonical_cell(std::string_view s, bool numeric_column) {
  std::string norm = normalize_text(s);
  if (numeric_column) {
    if (auto num = parse_number(norm)) return canonical_number(*num);
  }
  return norm;
}

}  // namespace mcsql

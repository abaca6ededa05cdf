#include "modematch/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "modematch/error.hpp"

namespace modematch {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& value) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

double number_at(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  if (!parse_number(field, v)) {
    throw_data("line " + std::to_string(line_no) + ": cannot parse '" + std::string(trim(field)) + "' as a number");
  }
  if (!std::isfinite(v)) throw_data("line " + std::to_string(line_no) + ": value is not finite");
  return v;
}

template <class F>
void for_each_line(const std::string& text, F&& f) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    f(std::string_view(text).substr(start, end - start), line_no);
    if (end == text.size()) break;
    start = end + 1;
  }
}

std::string_view strip_comment(std::string_view line) {
  const std::size_t hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  return trim(line);
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_plain(const std::string& text) {
  std::vector<double> out;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    line = strip_comment(line);
    if (!line.empty()) out.push_back(number_at(line, no));
  });
  if (out.empty()) throw_data("input contains no statistics");
  return out;
}

std::vector<double> parse_csv_column(const std::string& text, const std::string& column) {
  std::vector<double> out;
  long index = -1;
  std::size_t width = 0;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    if (trim(line).empty()) return;
    const auto fields = split(line, ',');
    if (index < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (unquote(fields[i]) == column) index = static_cast<long>(i);
      }
      if (index < 0) throw_data("CSV header has no column named '" + column + "'");
      width = fields.size();
      return;
    }
    if (fields.size() != width) {
      throw_data("line " + std::to_string(no) + ": expected " + std::to_string(width) + " fields, found " +
                 std::to_string(fields.size()));
    }
    out.push_back(number_at(unquote(fields[index]), no));
  });
  if (index < 0) throw_data("CSV input is empty");
  if (out.empty()) throw_data("CSV column '" + column + "' has no values");
  return out;
}

std::vector<double> read_statistics(const std::string& path, InputFormat format, const std::string& column) {
  const std::string text = read_file(path);
  if (format == InputFormat::Csv) {
    if (column.empty()) throw_invalid("CSV input needs a column name");
    return parse_csv_column(text, column);
  }
  return parse_plain(text);
}

BinCovariance parse_bin_covariance(const std::string& text) {
  std::vector<std::vector<double>> rows;
  bool matrix = false;
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    line = strip_comment(line);
    if (line.empty()) return;
    if (first) {
      first = false;
      if (line == "matrix") {
        matrix = true;
        return;
      }
      double probe = 0.0;
      if (!parse_number(split(line, ',').front(), probe)) return;  // header row
    }
    std::vector<double> row;
    for (auto field : split(line, ',')) row.push_back(number_at(field, no));
    if (!matrix) {
      for (double v : row) {
        if (v < 0.0 || v != std::floor(v)) {
          throw_data("line " + std::to_string(no) + ": replicate counts must be nonnegative integers");
        }
      }
    }
    rows.push_back(std::move(row));
  });
  if (!matrix) return permutation_cov(rows);

  const std::size_t K = rows.size();
  if (K == 0) throw_data("covariance matrix is empty");
  BinCovariance out;
  out.matrix.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < K; ++i) {
    if (rows[i].size() != K) throw_data("covariance matrix must be square");
    for (std::size_t j = 0; j < K; ++j) out.matrix(i, j) = rows[i][j];
  }
  if (!is_valid_covariance(out.matrix, 1e-8)) throw_data("supplied matrix is not a symmetric covariance");
  out.source = CovSource::Supplied;
  return out;
}

BinCovariance read_bin_covariance(const std::string& path) { return parse_bin_covariance(read_file(path)); }

std::string statistics_digest(const std::vector<double>& statistics) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double x : statistics) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace modematch

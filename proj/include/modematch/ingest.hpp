#pragma once

// Reading statistics and replicate histograms from text files.

#include <string>
#include <vector>

#include "modematch/covariance.hpp"

namespace modematch {

enum class InputFormat { Plain, Csv };

/// Plain: one number per line; blank lines and `#` comments skipped.
/// Csv: header row, values taken from `column`.
std::vector<double> read_statistics(const std::string& path, InputFormat format, const std::string& column = "");

std::vector<double> parse_plain(const std::string& text);
std::vector<double> parse_csv_column(const std::string& text, const std::string& column);

/// One replicate histogram per row (integer counts, optional header), or a
/// precomputed K x K covariance when the first line is `matrix`.
BinCovariance read_bin_covariance(const std::string& path);
BinCovariance parse_bin_covariance(const std::string& text);

std::string read_file(const std::string& path);

/// 64-bit FNV-1a over the IEEE bit patterns, as "fnv1a64:<hex>".
std::string statistics_digest(const std::vector<double>& statistics);

}  // namespace modematch

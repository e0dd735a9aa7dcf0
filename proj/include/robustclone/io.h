#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "robustclone/fitting.h"
#include "robustclone/lmi.h"

namespace robustclone {

/// System file: {"A": [[…]], "B": [[…]], "W": [[…]],
///               "channel": {"B1": …, "C1": …, "D12": …}}   (channel optional)
struct SystemFile {
  LinearSystem sys;
  std::optional<PerformanceChannel> channel;
};

std::string system_to_json(const SystemFile& f);
SystemFile system_from_json(const std::string& text);

/// Policy file: {"K": [[…]]}.
std::string gain_to_json(const Matrix& k);
Matrix gain_from_json(const std::string& text);

std::string report_to_json(const FitReport& r);

/// Demonstrations as CSV with header x1..xn,u1..um and one sample per row.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text);

/// Shortest decimal string that reads back to the same double; "nan", "inf"
/// and "-inf" for non-finite values.
std::string format_double(double v);
/// Inverse of format_double. Throws ValidationError on malformed input.
double parse_double(const std::string& s);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename. Throws std::runtime_error on IO
/// failure.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace robustclone

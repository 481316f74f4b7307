#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sysid/matrix_core.hpp"

namespace sysid {

/// Shortest decimal that round-trips to the same double; independent of the
/// global locale. Non-finite values print as nan / inf / -inf.
std::string format_double(double x);

/// Locale-independent parse of a full token; throws InvalidArgument.
double parse_double(std::string_view token);

/// CSV text, one matrix row per line, no header.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text, std::string_view origin = "<csv>");

Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Complex matrices are stored as two real CSVs, `<stem>.re.csv` and
/// `<stem>.im.csv`, next to each other.
void write_complex_matrix_csv(const std::filesystem::path& stem, const CMatrix& m);
CMatrix read_complex_matrix_csv(const std::filesystem::path& stem);

/// Writes `contents` to `path` via a temporary file in the same directory and
/// a rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace sysid

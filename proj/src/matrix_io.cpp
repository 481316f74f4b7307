#include "sysid/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "sysid/error.hpp"

namespace sysid {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty()) {
    throw InvalidArgument("cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text, std::string_view origin) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto tok = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      try {
        row.push_back(parse_double(tok));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) +
                            ": row has " + std::to_string(row.size()) + " columns, expected " +
                            std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(std::string(origin) + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  require_finite(m, origin);
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

Matrix read_matrix_csv(const fs::path& path) { return matrix_from_csv(read_file(path), path.string()); }

void write_matrix_csv(const fs::path& path, const Matrix& m) { write_file_atomic(path, matrix_to_csv(m)); }

namespace {
fs::path with_suffix(const fs::path& stem, const char* suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}
}  // namespace

void write_complex_matrix_csv(const fs::path& stem, const CMatrix& m) {
  write_matrix_csv(with_suffix(stem, ".re.csv"), m.real());
  write_matrix_csv(with_suffix(stem, ".im.csv"), m.imag());
}

CMatrix read_complex_matrix_csv(const fs::path& stem) {
  const Matrix re = read_matrix_csv(with_suffix(stem, ".re.csv"));
  const Matrix im = read_matrix_csv(with_suffix(stem, ".im.csv"));
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw DimensionError("complex matrix '" + stem.string() + "': real and imaginary parts differ in shape");
  }
  CMatrix out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

}  // namespace sysid

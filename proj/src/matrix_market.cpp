#include "amgs/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace amgs::mm {
namespace {

struct Banner {
  bool coordinate = false;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Banner read_banner(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("MatrixMarket: empty input");
  }
  std::istringstream ss(line);
  std::string tag, object, format, field, symmetry;
  ss >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
    throw FormatError("MatrixMarket: missing '%%MatrixMarket matrix' banner");
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "double" && field != "integer") {
    throw FormatError("MatrixMarket: unsupported field '" + field + "'");
  }
  Banner b;
  if (format == "coordinate") {
    b.coordinate = true;
  } else if (format != "array") {
    throw FormatError("MatrixMarket: unsupported format '" + format + "'");
  }
  if (symmetry == "symmetric") {
    b.symmetric = true;
  } else if (symmetry != "general") {
    throw FormatError("MatrixMarket: unsupported symmetry '" + symmetry + "'");
  }
  return b;
}

// Next line that is neither blank nor a comment.
std::istringstream next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') {
      continue;
    }
    return std::istringstream(line);
  }
  throw FormatError("MatrixMarket: unexpected end of input");
}

// strtod also accepts "inf", which the bound vectors use for +infinity.
bool parse_real(std::istringstream& line, double& v) {
  std::string tok;
  if (!(line >> tok)) {
    return false;
  }
  char* end = nullptr;
  v = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

void set_precision(std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
}

template <typename Fn>
auto with_file_in(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  }
  try {
    return fn(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <typename Fn>
void with_file_out(const std::filesystem::path& path, Fn fn) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  fn(out);
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

}  // namespace

SparseMatrix read_coordinate(std::istream& in) {
  const Banner banner = read_banner(in);
  if (!banner.coordinate) {
    throw FormatError("MatrixMarket: expected coordinate format");
  }
  auto size = next_data_line(in);
  Index rows = 0, cols = 0, entries = 0;
  if (!(size >> rows >> cols >> entries)) {
    throw FormatError("MatrixMarket: malformed size line");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(banner.symmetric ? 2 * entries : entries);
  for (Index k = 0; k < entries; ++k) {
    auto line = next_data_line(in);
    Index r = 0, c = 0;
    double v = 0.0;
    if (!(line >> r >> c) || !parse_real(line, v)) {
      throw FormatError("MatrixMarket: malformed entry " + std::to_string(k + 1));
    }
    if (r == 0 || c == 0 || r > rows || c > cols) {
      throw FormatError("MatrixMarket: entry " + std::to_string(k + 1) +
                        " out of range");
    }
    triplets.push_back({r - 1, c - 1, v});
    if (banner.symmetric && r != c) {
      triplets.push_back({c - 1, r - 1, v});
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

void write_coordinate(std::ostream& out, const SparseMatrix& a) {
  set_precision(out);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (Index r = 0; r < a.rows(); ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (Index p = 0; p < cols.size(); ++p) {
      out << r + 1 << ' ' << cols[p] + 1 << ' ' << vals[p] << '\n';
    }
  }
}

Matrix read_array(std::istream& in) {
  const Banner banner = read_banner(in);
  if (banner.coordinate) {
    throw FormatError("MatrixMarket: expected array format");
  }
  auto size = next_data_line(in);
  Eigen::Index rows = 0, cols = 0;
  if (!(size >> rows >> cols) || rows < 0 || cols < 0) {
    throw FormatError("MatrixMarket: malformed size line");
  }
  if (banner.symmetric && rows != cols) {
    throw FormatError("MatrixMarket: symmetric array must be square");
  }
  Matrix a = Matrix::Zero(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = banner.symmetric ? c : 0; r < rows; ++r) {
      auto line = next_data_line(in);
      double v = 0.0;
      if (!parse_real(line, v)) {
        throw FormatError("MatrixMarket: malformed array value");
      }
      a(r, c) = v;
      if (banner.symmetric) {
        a(c, r) = v;
      }
    }
  }
  return a;
}

void write_array(std::ostream& out, const Matrix& a) {
  set_precision(out);
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      out << a(r, c) << '\n';
    }
  }
}

Vector read_vector(std::istream& in) {
  const Matrix a = read_array(in);
  if (a.cols() != 1) {
    throw FormatError("MatrixMarket: expected a single-column array");
  }
  return a.col(0);
}

void write_vector(std::ostream& out, const Vector& v) { write_array(out, v); }

SparseMatrix load_coordinate(const std::filesystem::path& path) {
  return with_file_in(path, [](std::istream& in) { return read_coordinate(in); });
}
void save_coordinate(const std::filesystem::path& path, const SparseMatrix& a) {
  with_file_out(path, [&](std::ostream& out) { write_coordinate(out, a); });
}
Matrix load_array(const std::filesystem::path& path) {
  return with_file_in(path, [](std::istream& in) { return read_array(in); });
}
void save_array(const std::filesystem::path& path, const Matrix& a) {
  with_file_out(path, [&](std::ostream& out) { write_array(out, a); });
}
Vector load_vector(const std::filesystem::path& path) {
  return with_file_in(path, [](std::istream& in) { return read_vector(in); });
}
void save_vector(const std::filesystem::path& path, const Vector& v) {
  with_file_out(path, [&](std::ostream& out) { write_vector(out, v); });
}

}  // namespace amgs::mm

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "amgs/sparse.hpp"

namespace amgs::mm {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coordinate format, 1-based indices. `symmetric` files are expanded on read;
// writes are always `general`.
SparseMatrix read_coordinate(std::istream& in);
void write_coordinate(std::ostream& out, const SparseMatrix& a);

// Dense array format, column-major. Vectors are n x 1 arrays.
Matrix read_array(std::istream& in);
void write_array(std::ostream& out, const Matrix& a);
Vector read_vector(std::istream& in);
void write_vector(std::ostream& out, const Vector& v);

SparseMatrix load_coordinate(const std::filesystem::path& path);
void save_coordinate(const std::filesystem::path& path, const SparseMatrix& a);
Matrix load_array(const std::filesystem::path& path);
void save_array(const std::filesystem::path& path, const Matrix& a);
Vector load_vector(const std::filesystem::path& path);
void save_vector(const std::filesystem::path& path, const Vector& v);

}  // namespace amgs::mm

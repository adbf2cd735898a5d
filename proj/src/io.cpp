#include "byzcode/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace byzcode {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, const Matrix& a) {
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) out << ' ';
      out << format_real(a(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  long long rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw Error(ErrorCode::io, "bad matrix header");
  }
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok)) throw Error(ErrorCode::io, "matrix file ends early");
      try {
        std::size_t used = 0;
        a(i, j) = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::io, "bad number '" + tok + "'");
      }
    }
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::io, "trailing data after matrix");
  return a;
}

void save_matrix(const std::string& path, const Matrix& a) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path);
  write_matrix(f, a);
  if (!f) throw Error(ErrorCode::io, "write failed for " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open " + path);
  return read_matrix(f);
}

}  // namespace byzcode

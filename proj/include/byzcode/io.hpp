#pragma once

#include <iosfwd>
#include <string>

#include "byzcode/common.hpp"

namespace byzcode {

// Text format: "rows cols" on the first line, then one row per line,
// whitespace separated, 17 significant digits.
void write_matrix(std::ostream& out, const Matrix& a);
Matrix read_matrix(std::istream& in);
void save_matrix(const std::string& path, const Matrix& a);
Matrix load_matrix(const std::string& path);

std::string format_real(double v);  // %.17g

}  // namespace byzcode

#pragma once

// Shared plumbing for the GENREC text formats: shortest round-trip decimal
// output and a whitespace token reader with positional error messages.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "genrec/numerics.hpp"

namespace genrec {

/// Shortest decimal that parses back to the identical double ("nan"/"inf" for non-finite).
std::string format_real(double v);
double parse_real(std::string_view text);

/// Writes the values separated by single spaces, newline-terminated.
void write_row(std::ostream& os, const double* data, Index n);
void write_matrix_rows(std::ostream& os, const Matrix& a);

class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}

  bool at_end();
  std::string next(std::string_view what);
  void expect(std::string_view word);
  double read_real(std::string_view what);
  long long read_integer(std::string_view what);
  Index read_count(std::string_view what);

 private:
  std::istream& is_;
  std::size_t token_index_ = 0;
};

/// Parses "key=value" tokens; throws FormatError if the key differs.
std::string keyed_value(std::string_view token, std::string_view key);

}  // namespace genrec
